"""Flat key=value run configuration with typed parsing.

A run is described by a flat mapping of dotted keys to strings, assembled
from defaults, an optional config file, and repeatable KEY=VALUE overrides
(later sources win).  `RunConfig.from_mapping` validates everything eagerly
and reports the offending key in every error; `to_mapping` echoes a
normalized mapping that parses back to an equal RunConfig.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .forcing import CONSTRUCTIONS, ForcingSpec
from .solver import SolverParams
from .spectral import Grid

__all__ = ["ConfigError", "RunConfig", "ScanSettings", "LemmaSettings", "DEFAULTS",
           "parse_config_file", "parse_override", "merge_mappings"]


class ConfigError(Exception):
    pass


DEFAULTS: dict[str, str] = {
    "seed": "0",
    "plots": "true",
    "input.dir": "",
    "grid.n": "32",
    "grid.box_len": "6.283185307179586",
    "solver.alpha": "1.5",
    "solver.epsilon": "0.1",
    "solver.cutoff_radius": "2.8274333882308138",
    "solver.lambda": "1.0",
    "solver.damping": "1.0",
    "solver.tol": "1e-10",
    "solver.max_iter": "400",
    "solver.continuation": "",
    "forcing.kind": "single_mode",
    "forcing.amplitude": "1.0",
    "forcing.band": "1:4",
    "forcing.seed": "auto",
    "forcing.target_dual_norm": "0.05",
    "scan.radii": "1.5,1.94,2.5,3.23,4.17,5.39,6.96,8.99,11.61,15.0",
    "scan.epsilon": "1.0",
    "scan.nu": "0.5",
    "scan.alpha": "1.0",
    "scan.envelope": "gaussian",
    "scan.width": "1.3",
    "scan.band": "1:6",
    "scan.seed": "auto",
    "norms.lebesgue": "2,3,4.5,6",
    "norms.sobolev": "-0.5,0,0.5,1",
    "bootstrap.mode": "subcritical",
    "bootstrap.alpha": "1.8",
    "bootstrap.target": "3.0",
    "bootstrap.tail_orders": "",
    "lemmas.trials": "100",
    "lemmas.grid_n": "32",
    "lemmas.product_s": "0.5",
    "lemmas.product_delta": "0.75",
    "lemmas.leibniz_s1": "0.3",
    "lemmas.leibniz_s2": "0.4",
    "lemmas.leibniz_p1": "4.0",
    "lemmas.leibniz_p2": "4.0",
    "lemmas.embedding_s": "1.0",
}


@dataclass(frozen=True)
class ScanSettings:
    radii: tuple[float, ...]
    epsilon: float
    nu: float
    alpha: float
    envelope: str
    width: float
    band: tuple[int, int]
    seed: int


@dataclass(frozen=True)
class LemmaSettings:
    trials: int
    grid_n: int
    product_s: float
    product_delta: float
    leibniz_s1: float
    leibniz_s2: float
    leibniz_p1: float
    leibniz_p2: float
    embedding_s: float


@dataclass(frozen=True)
class RunConfig:
    seed: int
    plots: bool
    input_dir: str
    grid: Grid
    solver: SolverParams
    forcing: ForcingSpec
    forcing_target_dual: float | None
    scan: ScanSettings
    norms_lebesgue: tuple[float, ...]
    norms_sobolev: tuple[float, ...]
    bootstrap_mode: str
    bootstrap_alpha: float
    bootstrap_target: float
    tail_orders: tuple[float, ...]
    lemmas: LemmaSettings

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RunConfig":
        m = dict(DEFAULTS)
        for key, value in mapping.items():
            if key not in DEFAULTS:
                raise ConfigError(f"config key {key!r}: unknown key")
            m[key] = value

        def get(key, conv, desc):
            raw = m[key]
            try:
                return conv(raw)
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(
                    f"config key {key!r}: cannot parse {raw!r} as {desc} ({exc})"
                ) from None

        def parse_bool(raw):
            low = raw.strip().lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError("expected true/false")

        def parse_band(raw):
            lo, hi = raw.split(":")
            return (int(lo), int(hi))

        def parse_floats(raw):
            raw = raw.strip()
            if not raw:
                return ()
            return tuple(float(tok) for tok in raw.split(","))

        def parse_schedule(raw):
            raw = raw.strip()
            if not raw:
                return ()
            stages = []
            for tok in raw.split(","):
                eps, radius = tok.split(":")
                stages.append((float(eps), float(radius)))
            return tuple(stages)

        seed = get("seed", int, "an integer")

        def parse_seed(raw):
            return seed if raw.strip() == "auto" else int(raw)

        plots = get("plots", parse_bool, "a boolean")
        input_dir = m["input.dir"].strip()

        def build(key, ctor, desc):
            try:
                return ctor()
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from None

        n = get("grid.n", int, "an integer")
        box_len = get("grid.box_len", float, "a float")
        grid = build("grid.n", lambda: Grid(n, box_len), "grid")

        solver_kwargs = dict(
            alpha=get("solver.alpha", float, "a float"),
            epsilon=get("solver.epsilon", float, "a float"),
            cutoff_radius=get("solver.cutoff_radius", float, "a float"),
            lam=get("solver.lambda", float, "a float"),
            damping=get("solver.damping", float, "a float"),
            tol=get("solver.tol", float, "a float"),
            max_iter=get("solver.max_iter", int, "an integer"),
            continuation=get(
                "solver.continuation", parse_schedule, "an eps:radius,... schedule"
            ),
        )
        solver = build("solver.alpha", lambda: SolverParams(**solver_kwargs), "solver")
        if not solver.cutoff_radius < 0.5 * grid.box_len:
            raise ConfigError(
                "config key 'solver.cutoff_radius': must stay below box_len/2 "
                f"= {0.5 * grid.box_len}"
            )

        kind = m["forcing.kind"].strip()
        if kind not in CONSTRUCTIONS:
            raise ConfigError(
                f"config key 'forcing.kind': unknown construction {kind!r}; "
                f"expected one of {CONSTRUCTIONS}"
            )
        forcing_kwargs = dict(
            construction=kind,
            amplitude=get("forcing.amplitude", float, "a float"),
            band=get("forcing.band", parse_band, "a lo:hi band"),
            seed=get("forcing.seed", parse_seed, "an integer or 'auto'"),
        )
        forcing = build(
            "forcing.kind", lambda: ForcingSpec(**forcing_kwargs), "forcing"
        )

        def parse_target(raw):
            raw = raw.strip().lower()
            if raw in ("", "none"):
                return None
            return float(raw)

        target = get("forcing.target_dual_norm", parse_target, "a float or 'none'")

        radii = get("scan.radii", parse_floats, "a comma list of floats")
        if not radii:
            raise ConfigError("config key 'scan.radii': at least one radius required")
        envelope = m["scan.envelope"].strip()
        if envelope not in ("gaussian", "inverse_square"):
            raise ConfigError(
                f"config key 'scan.envelope': unknown envelope {envelope!r}"
            )
        scan = ScanSettings(
            radii=radii,
            epsilon=get("scan.epsilon", float, "a float"),
            nu=get("scan.nu", float, "a float"),
            alpha=get("scan.alpha", float, "a float"),
            envelope=envelope,
            width=get("scan.width", float, "a float"),
            band=get("scan.band", parse_band, "a lo:hi band"),
            seed=get("scan.seed", parse_seed, "an integer or 'auto'"),
        )
        if not 0 < scan.nu < 1:
            raise ConfigError("config key 'scan.nu': must lie in (0, 1)")
        if not 0 < scan.alpha < 2:
            raise ConfigError("config key 'scan.alpha': must lie in (0, 2)")

        mode = m["bootstrap.mode"].strip()
        if mode not in ("subcritical", "bounded_hypothesis"):
            raise ConfigError(
                f"config key 'bootstrap.mode': unknown mode {mode!r}"
            )
        lemmas = LemmaSettings(
            trials=get("lemmas.trials", int, "an integer"),
            grid_n=get("lemmas.grid_n", int, "an integer"),
            product_s=get("lemmas.product_s", float, "a float"),
            product_delta=get("lemmas.product_delta", float, "a float"),
            leibniz_s1=get("lemmas.leibniz_s1", float, "a float"),
            leibniz_s2=get("lemmas.leibniz_s2", float, "a float"),
            leibniz_p1=get("lemmas.leibniz_p1", float, "a float"),
            leibniz_p2=get("lemmas.leibniz_p2", float, "a float"),
            embedding_s=get("lemmas.embedding_s", float, "a float"),
        )
        if lemmas.trials < 1:
            raise ConfigError("config key 'lemmas.trials': must be at least 1")

        return cls(
            seed=seed,
            plots=plots,
            input_dir=input_dir,
            grid=grid,
            solver=solver,
            forcing=forcing,
            forcing_target_dual=target,
            scan=scan,
            norms_lebesgue=get("norms.lebesgue", parse_floats, "a comma list"),
            norms_sobolev=get("norms.sobolev", parse_floats, "a comma list"),
            bootstrap_mode=mode,
            bootstrap_alpha=get("bootstrap.alpha", float, "a float"),
            bootstrap_target=get("bootstrap.target", float, "a float"),
            tail_orders=get("bootstrap.tail_orders", parse_floats, "a comma list"),
            lemmas=lemmas,
        )

    def to_mapping(self) -> dict[str, str]:
        """Normalized flat echo; parses back to an equal RunConfig."""

        def floats(vals):
            return ",".join(repr(float(v)) for v in vals)

        return {
            "seed": str(self.seed),
            "plots": "true" if self.plots else "false",
            "input.dir": self.input_dir,
            "grid.n": str(self.grid.n),
            "grid.box_len": repr(self.grid.box_len),
            "solver.alpha": repr(self.solver.alpha),
            "solver.epsilon": repr(self.solver.epsilon),
            "solver.cutoff_radius": repr(self.solver.cutoff_radius),
            "solver.lambda": repr(self.solver.lam),
            "solver.damping": repr(self.solver.damping),
            "solver.tol": repr(self.solver.tol),
            "solver.max_iter": str(self.solver.max_iter),
            "solver.continuation": ",".join(
                f"{repr(e)}:{repr(r)}" for e, r in self.solver.continuation
            ),
            "forcing.kind": self.forcing.construction,
            "forcing.amplitude": repr(self.forcing.amplitude),
            "forcing.band": f"{self.forcing.band[0]}:{self.forcing.band[1]}",
            "forcing.seed": str(self.forcing.seed),
            "forcing.target_dual_norm": (
                "none" if self.forcing_target_dual is None
                else repr(self.forcing_target_dual)
            ),
            "scan.radii": floats(self.scan.radii),
            "scan.epsilon": repr(self.scan.epsilon),
            "scan.nu": repr(self.scan.nu),
            "scan.alpha": repr(self.scan.alpha),
            "scan.envelope": self.scan.envelope,
            "scan.width": repr(self.scan.width),
            "scan.band": f"{self.scan.band[0]}:{self.scan.band[1]}",
            "scan.seed": str(self.scan.seed),
            "norms.lebesgue": floats(self.norms_lebesgue),
            "norms.sobolev": floats(self.norms_sobolev),
            "bootstrap.mode": self.bootstrap_mode,
            "bootstrap.alpha": repr(self.bootstrap_alpha),
            "bootstrap.target": repr(self.bootstrap_target),
            "bootstrap.tail_orders": floats(self.tail_orders),
            "lemmas.trials": str(self.lemmas.trials),
            "lemmas.grid_n": str(self.lemmas.grid_n),
            "lemmas.product_s": repr(self.lemmas.product_s),
            "lemmas.product_delta": repr(self.lemmas.product_delta),
            "lemmas.leibniz_s1": repr(self.lemmas.leibniz_s1),
            "lemmas.leibniz_s2": repr(self.lemmas.leibniz_s2),
            "lemmas.leibniz_p1": repr(self.lemmas.leibniz_p1),
            "lemmas.leibniz_p2": repr(self.lemmas.leibniz_p2),
            "lemmas.embedding_s": repr(self.lemmas.embedding_s),
        }


def parse_config_file(path) -> dict[str, str]:
    """Read a key = value file; # starts a comment, blank lines ignored."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = stripped.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def parse_override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"override must look like KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def merge_mappings(*mappings: dict[str, str]) -> dict[str, str]:
    merged: dict[str, str] = {}
    for m in mappings:
        merged.update(m)
    return merged
