"""RAM cost model for running an N:P:H:M network on a small microcontroller.

Line items follow the target's storage rules: float arrays take 4 bytes per
element, trained weights are stored as 2-byte integers, plus fixed platform
overheads.  "Streaming" inference regenerates the reservoir matrix on the
fly and so omits its storage; "materialized" inference keeps it in RAM.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .pipeline import Architecture

__all__ = ["Mode", "PlatformCosts", "RamBreakdown", "estimate", "fits", "FitResult", "format_table"]

REAL_BYTES = 4
INT_BYTES = 2


class Mode(str, enum.Enum):
    STREAMING = "alg1"
    MATERIALIZED = "alg2"

    @classmethod
    def parse(cls, value: "str | Mode") -> "Mode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"1": cls.STREAMING, "alg1": cls.STREAMING, "streaming": cls.STREAMING,
                   "2": cls.MATERIALIZED, "alg2": cls.MATERIALIZED, "materialized": cls.MATERIALIZED}
        if key not in aliases:
            raise ValueError(f"unknown mode {value!r}; use alg1 or alg2")
        return aliases[key]


@dataclass(frozen=True)
class PlatformCosts:
    """Fixed byte costs of the target platform (defaults: 8-bit Arduino board)."""

    variables: int = 20
    serial_port: int = 178
    math_scratch: int = 200


@dataclass(frozen=True)
class RamBreakdown:
    arch: Architecture
    array_y: int
    matrix_w: int
    weights_hidden: int
    weights_output: int
    array_sh: int
    array_sh2: int
    array_sout: int
    auxiliary: int
    variables: int
    serial_port: int
    math_scratch: int

    @property
    def total_streaming(self) -> int:
        return (self.array_y + self.weights_hidden + self.weights_output + self.array_sh
                + self.array_sh2 + self.array_sout + self.auxiliary + self.variables
                + self.serial_port + self.math_scratch)

    @property
    def total_materialized(self) -> int:
        return self.total_streaming + self.matrix_w

    @property
    def saving(self) -> int:
        return self.matrix_w

    def total(self, mode: "Mode | str") -> int:
        return self.total_streaming if Mode.parse(mode) is Mode.STREAMING else self.total_materialized

    def items(self) -> list[tuple[str, int]]:
        return [
            ("Array Y", self.array_y),
            ("Matrix W", self.matrix_w),
            ("Weight matrix S_h/S_h2", self.weights_hidden),
            ("Weight matrix S_h2/S_out", self.weights_output),
            ("Array S_h", self.array_sh),
            ("Array S_h2", self.array_sh2),
            ("Array S_out", self.array_sout),
            ("Auxiliary arrays", self.auxiliary),
            ("Variables", self.variables),
            ("Serial port", self.serial_port),
            ("Memory for mathematical calculations", self.math_scratch),
        ]

    def to_dict(self) -> dict:
        return {
            "architecture": str(self.arch),
            "items": dict(self.items()),
            "total_alg1": self.total_streaming,
            "total_alg2": self.total_materialized,
            "saving": self.saving,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def format_items(self) -> str:
        """Per-item listing with the share of each algorithm's total."""
        t1, t2 = self.total_streaming, self.total_materialized
        lines = [f"RAM allocation, LogNNet {self.arch}",
                 f"{'Item':<38}{'Bytes':>8}{'Alg1 %':>9}{'Alg2 %':>9}"]
        for name, size in self.items():
            share1 = "-" if name == "Matrix W" else f"{100 * size / t1:.1f}"
            lines.append(f"{name:<38}{size:>8}{share1:>9}{100 * size / t2:>9.1f}")
        lines.append(f"{'Total Algorithm 1 (streaming)':<38}{t1:>8}")
        lines.append(f"{'Total Algorithm 2 (materialized)':<38}{t2:>8}")
        return "\n".join(lines)


def estimate(arch: "Architecture | str", platform: PlatformCosts = PlatformCosts()) -> RamBreakdown:
    a = Architecture.parse(arch)
    N, P, H, M = a.N, a.P, a.H, a.M
    return RamBreakdown(
        arch=a,
        array_y=(N + 1) * REAL_BYTES,
        matrix_w=(N + 1) * P * REAL_BYTES,
        weights_hidden=(P + 1) * H * INT_BYTES,
        weights_output=(H + 1) * M * INT_BYTES,
        array_sh=(P + 1) * REAL_BYTES,
        array_sh2=(H + 1) * REAL_BYTES,
        array_sout=M * REAL_BYTES,
        auxiliary=P * 3 * INT_BYTES,
        variables=platform.variables,
        serial_port=platform.serial_port,
        math_scratch=platform.math_scratch,
    )


@dataclass(frozen=True)
class FitResult:
    fits: bool
    headroom: int
    total: int
    limit: int
    mode: Mode


def fits(arch: "Architecture | str", ram_limit_bytes: int, mode: "Mode | str" = Mode.STREAMING,
         platform: PlatformCosts = PlatformCosts()) -> FitResult:
    """Whether the chosen mode fits in ``ram_limit_bytes``; headroom may be negative."""
    if ram_limit_bytes <= 0:
        raise ValueError("RAM limit must be positive")
    mode = Mode.parse(mode)
    total = estimate(arch, platform).total(mode)
    return FitResult(total <= ram_limit_bytes, ram_limit_bytes - total, total, ram_limit_bytes, mode)


def format_table(breakdowns: "list[RamBreakdown]") -> str:
    lines = [f"{'LogNNet Architecture':<26}{'RAM Algorithm 1':>17}{'RAM Algorithm 2':>17}{'RAM Saving':>13}"]
    for b in breakdowns:
        lines.append(f"{'LogNNet ' + str(b.arch):<26}{b.total_streaming:>15,} B"
                     f"{b.total_materialized:>15,} B{b.saving:>11,} B")
    return "\n".join(lines)
