"""CSV results table and key=value metadata sidecar."""
from __future__ import annotations

import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_HEADER = "t,mean_regret,regret_ci_low,regret_ci_high,mean_hit_rate,mean_bank_size"


def fmt(v) -> str:
    s = format(float(v), ".6g")
    return "0" if s == "-0" else s


@dataclass
class ResultsTable:
    t: np.ndarray
    mean_regret: np.ndarray
    regret_ci_low: np.ndarray
    regret_ci_high: np.ndarray
    mean_hit_rate: np.ndarray
    mean_bank_size: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("checkpoint steps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    def columns(self):
        return (self.t, self.mean_regret, self.regret_ci_low, self.regret_ci_high,
                self.mean_hit_rate, self.mean_bank_size)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for row in zip(*self.columns()):
            lines.append(",".join([str(int(row[0]))] + [fmt(v) for v in row[1:]]))
        return "\n".join(lines) + "\n"

    def to_meta(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.meta.items())

    def write(self, path) -> Path:
        path = Path(path)
        try:
            path.write_bytes(self.to_csv().encode("utf-8"))
            meta_path(path).write_bytes(self.to_meta().encode("utf-8"))
        except OSError as exc:
            raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
        return path


def meta_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".meta")


def read_csv(path) -> dict[str, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if text[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {text[0]!r}")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    return {name: data[:, k] for k, name in enumerate(CSV_HEADER.split(","))}


def build_id() -> str:
    from .. import __version__
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        sha = rev.stdout.strip() if rev.returncode == 0 else ""
    except (OSError, subprocess.SubprocessError):
        sha = ""
    return f"{__version__}+g{sha}" if sha else __version__
