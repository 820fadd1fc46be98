"""Python bindings for the idmob IoT data marketplace core."""

from ._idmob import (
    DEFAULT_BLOCK_INTERVAL_S,
    HASH_FUNCTION,
    Error,
    Market,
    decrypt,
    derive_key,
    encrypt,
    generate_keypair,
    geohex_contains,
    geohex_decode,
    geohex_encode,
    master_from_seed,
    replay,
    run_scenario,
    sha256,
    spatial_filter,
    unwrap_key,
    wrap_key,
)


def run_scenario_file(path, **kwargs):
    with open(path, encoding="utf-8") as f:
        return run_scenario(f.read(), **kwargs)


__all__ = [
    "DEFAULT_BLOCK_INTERVAL_S",
    "HASH_FUNCTION",
    "Error",
    "Market",
    "decrypt",
    "derive_key",
    "encrypt",
    "generate_keypair",
    "geohex_contains",
    "geohex_decode",
    "geohex_encode",
    "master_from_seed",
    "replay",
    "run_scenario",
    "run_scenario_file",
    "sha256",
    "spatial_filter",
    "unwrap_key",
    "wrap_key",
]
