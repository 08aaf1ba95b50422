from typing import Callable, List, Optional

from src.model_domain.model import ModelConfig, ModelError, SchemeCase
from src.utils.logger import get_logger

logger = get_logger(__name__)

ConfigCheck = Callable[[ModelConfig], List[str]]


class ConfigValidationError(ModelError):
    """
    Raised when a ModelConfig violates one or more structural constraints.
    Every violated constraint is listed in ``errors``.
    """

    def __init__(self, errors: List[str]):
        super().__init__("Invalid model configuration: " + "; ".join(errors))
        self.errors = errors


class ConfigValidator:
    """
    Runs a list of checks over a ModelConfig and collects every violation.

    Each check accepts the config and returns a (possibly empty) list of
    error messages. If no checks are given the structural checks below are
    applied.
    """

    def __init__(self, checks: Optional[List[ConfigCheck]] = None) -> None:
        self.checks = checks if checks is not None else [
            self.check_segments,
            self.check_database_count,
            self.check_sparsity,
            self.check_field,
        ]

    def validate(self, cfg: ModelConfig) -> ModelConfig:
        errors: List[str] = []
        for check in self.checks:
            errors.extend(check(cfg))

        if errors:
            for error in errors:
                logger.error(f"Validation failed: {error}")
            raise ConfigValidationError(errors)

        logger.debug(f"Validation passed for config {cfg.to_dict()}")
        return cfg

    @staticmethod
    def check_segments(cfg: ModelConfig) -> List[str]:
        errors = []
        if cfg.P < 2:
            errors.append(f"P must be at least 2 (P={cfg.P})")
        if not 1 <= cfg.B < cfg.P:
            errors.append(f"B must satisfy 1 <= B < P (P={cfg.P}, B={cfg.B})")
        if cfg.B >= 1 and cfg.P % cfg.B != 0:
            errors.append(f"B must divide P (P={cfg.P}, B={cfg.B})")
        return errors

    @staticmethod
    def check_database_count(cfg: ModelConfig) -> List[str]:
        if cfg.ell < 1:
            return [f"ell must be positive (ell={cfg.ell})"]
        expected = 2 * cfg.ell + cfg.case.database_overhead
        if cfg.N != expected:
            label = "Case1" if cfg.case is SchemeCase.CASE1 else "Case2"
            return [
                f"{label} requires N = 2*ell + {cfg.case.database_overhead} "
                f"(got N={cfg.N}, ell={cfg.ell})"
            ]
        return []

    @staticmethod
    def check_sparsity(cfg: ModelConfig) -> List[str]:
        errors = []
        for name, rate in (("r", cfg.r), ("r_prime", cfg.r_prime)):
            count = cfg.P * rate
            if count.denominator != 1 or count <= 0:
                errors.append(f"P*{name} must be a positive integer (P={cfg.P}, {name}={rate})")
            elif count > cfg.P:
                errors.append(f"P*{name} cannot exceed P (P={cfg.P}, {name}={rate})")
        return errors

    @staticmethod
    def check_field(cfg: ModelConfig) -> List[str]:
        errors = []
        if cfg.field.ell != cfg.ell:
            errors.append(f"field needs {cfg.ell} f constants, got {cfg.field.ell}")
        if cfg.field.N != cfg.N:
            errors.append(f"field needs {cfg.N} alpha constants, got {cfg.field.N}")
        errors.extend(cfg.field.validate())
        return errors


def validate_config(cfg: ModelConfig) -> ModelConfig:
    """Returns cfg when valid, otherwise raises ConfigValidationError listing every violation."""
    return ConfigValidator().validate(cfg)
