"""
Analysis configuration module for the must-call checker.
Provides the named analysis modes (full and naive) and per-run options.
"""

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from mustcall.constants import Constants


@dataclass(frozen=True)
class ModeConfig:
    """Configuration for a specific analysis mode."""

    # Mode name
    name: str

    # Attribute-blind baseline
    naive: bool = False

    # Resource-management attributes at method boundaries
    use_attributes: bool = True

    # Alias sources beyond local flow
    use_resource_alias: bool = True
    use_field_alias: bool = True

    # Null comparisons discharge obligations on the null edge
    null_discharge: bool = True

    # Class- and method-level obligation checks
    check_owning_fields: bool = True
    check_create_must_call_for: bool = True

    # Longest witness path attached to a report
    witness_max_nodes: int = Constants.WITNESS_MAX_NODES


class Config:
    """Main configuration class that provides mode-specific settings."""

    # Mode configurations
    MODES: Dict[str, ModeConfig] = {
        "full": ModeConfig(name="full"),
        "naive": ModeConfig(
            name="naive",
            naive=True,
            use_attributes=False,
            use_resource_alias=False,
            use_field_alias=False,
            null_discharge=False,
            check_owning_fields=False,
            check_create_must_call_for=False,
        ),
    }

    mode_name: str
    mode_config: ModeConfig

    # Commonly accessed attributes exposed directly on the config
    naive: bool
    use_attributes: bool
    use_resource_alias: bool
    use_field_alias: bool
    null_discharge: bool
    check_owning_fields: bool
    check_create_must_call_for: bool
    witness_max_nodes: int

    def __init__(self, mode_name: str = "full"):
        """Initialize configuration for the specified mode."""
        if mode_name not in self.MODES:
            raise ValueError(
                f"Unknown mode: {mode_name}. Available: {list(self.MODES.keys())}"
            )

        self.mode_name = mode_name
        self.mode_config = self.MODES[mode_name]

        # Set attributes for easy access
        for field_name, field_value in self.mode_config.__dict__.items():
            setattr(self, field_name, field_value)

    @property
    def is_naive(self) -> bool:
        """Check if this is the attribute-blind baseline mode."""
        return self.mode_name == "naive"

    @property
    def is_full(self) -> bool:
        """Check if this is the full attribute-aware mode."""
        return self.mode_name == "full"

    def __repr__(self) -> str:
        return f"Config({self.mode_name!r})"


@dataclass
class RunConfig:
    """Options for a single checker run."""

    inputs: List[str]
    specs: Optional[str] = None
    output_format: str = "text"
    strict: bool = False
    dump_cfg: bool = False
    dump_aliases: bool = False
    color: bool = False
    mode: Config = field(default_factory=Config)


def color_enabled(stream_is_tty: bool) -> bool:
    """Colors are used only on a TTY and when MUSTCALL_NO_COLOR is unset."""
    if os.environ.get(Constants.NO_COLOR_ENV_VAR):
        return False
    return stream_is_tty
