import galois

from src.config.config import CONFIG, BASE_PATH

def test_config_keys():
    required_keys = {
        "field_modulus", "output_dir", "transcript_file", "snapshot_file",
        "max_workers", "default_seed", "entropy_base", "log_level", "log_file"
    }
    assert required_keys.issubset(set(CONFIG.keys()))

def test_config_values():
    # Output directory is a Path under the project root.
    assert isinstance(CONFIG["output_dir"], type(BASE_PATH))
    assert isinstance(CONFIG["max_workers"], int)
    assert isinstance(CONFIG["default_seed"], int)
    assert CONFIG["entropy_base"] >= 2

def test_default_modulus_is_prime():
    assert galois.is_prime(CONFIG["field_modulus"])
