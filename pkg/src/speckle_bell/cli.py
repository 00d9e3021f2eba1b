"""Command-line front end: seeded, reproducible simulation scenarios.

Every subcommand is a pure function of (config file, flags, seed): rerunning
with the same inputs produces byte-identical files.  Outputs land in
``<out>/run_<seed>/``.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import chsh, medium, pairsource, stats
from .polarization import (
    PoincareState,
    WaveplateSetting,
    amplitude_vector,
    random_alice_basis,
    waveplate_projection,
)

# Stream tags for deriving independent sub-seeds from the master seed.
_TAG_TM, _TAG_ALICE, _TAG_COUNTS, _TAG_POSITIONS = 1, 2, 3, 4

CONFIG_DEFAULTS: dict[str, object] = {
    "m_spatial": 200,
    "n_positions": 15,
    "visibility": 0.93,
    "coherence_length": 0.1,
    "pair_rate": 500.0,
    "integration_time": 240.0,
    "efficiency": 0.5,
    "noiseless": False,
    "seed": 0,
    "alice_draws": 1,
    "input_mode": 0,
    "hist_bin_width": 0.05,
    "hist_lo": 0.0,
    "hist_hi": 3.0,
}


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Full scenario configuration with the package defaults."""

    m_spatial: int = 200
    n_positions: int = 15
    visibility: float = 0.93
    coherence_length: float = 0.1
    acquisition: stats.AcquisitionConfig = field(
        default_factory=stats.AcquisitionConfig
    )
    noiseless: bool = False
    seed: int = 0
    alice_draws: int = 1
    input_mode: int = 0
    hist_bin_width: float = 0.05
    hist_lo: float = 0.0
    hist_hi: float = 3.0

    def validate(self) -> None:
        if self.m_spatial < 1:
            raise ConfigError(f"m_spatial must be >= 1, got {self.m_spatial}")
        if self.n_positions < 1:
            raise ConfigError(f"n_positions must be >= 1, got {self.n_positions}")
        if self.n_positions > self.m_spatial:
            raise ConfigError(
                f"n_positions ({self.n_positions}) exceeds m_spatial ({self.m_spatial})"
            )
        if not 0.0 <= self.visibility <= 1.0:
            raise ConfigError(f"visibility must be in [0, 1], got {self.visibility}")
        if not self.coherence_length > 0:
            raise ConfigError(
                f"coherence_length must be positive, got {self.coherence_length}"
            )
        if not 0 <= self.input_mode < self.m_spatial:
            raise ConfigError(
                f"input_mode must be in [0, {self.m_spatial}), got {self.input_mode}"
            )
        if self.alice_draws < 1:
            raise ConfigError(f"alice_draws must be >= 1, got {self.alice_draws}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if not self.hist_bin_width > 0:
            raise ConfigError(
                f"hist_bin_width must be positive, got {self.hist_bin_width}"
            )
        if not self.hist_lo < self.hist_hi:
            raise ConfigError(
                f"need hist_lo < hist_hi, got ({self.hist_lo}, {self.hist_hi})"
            )


def derive_seed(master: int, tag: int) -> int:
    """Deterministic 64-bit child seed for one stream of a run."""
    words = np.random.SeedSequence((int(master), int(tag))).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def _coerce(key: str, raw: str):
    default = CONFIG_DEFAULTS[key]
    try:
        if isinstance(default, bool):
            lowered = raw.strip().lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config_file(path: str | Path) -> dict:
    """Parse a flat key=value config file with '#' comments."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in CONFIG_DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown config key: {key}")
        values[key] = _coerce(key, raw.strip())
    return values


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, config file and command-line flags."""
    values = dict(CONFIG_DEFAULTS)
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if getattr(args, "nu", None) is not None:
        values["visibility"] = args.nu
    if getattr(args, "noiseless", False):
        values["noiseless"] = True

    seed = int(values["seed"])
    try:
        acquisition = stats.AcquisitionConfig(
            pair_rate=float(values["pair_rate"]),
            integration_time=float(values["integration_time"]),
            efficiency=float(values["efficiency"]),
            seed=derive_seed(seed, _TAG_COUNTS),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = ExperimentConfig(
        m_spatial=int(values["m_spatial"]),
        n_positions=int(values["n_positions"]),
        visibility=float(values["visibility"]),
        coherence_length=float(values["coherence_length"]),
        acquisition=acquisition,
        noiseless=bool(values["noiseless"]),
        seed=seed,
        alice_draws=int(values["alice_draws"]),
        input_mode=int(values["input_mode"]),
        hist_bin_width=float(values["hist_bin_width"]),
        hist_lo=float(values["hist_lo"]),
        hist_hi=float(values["hist_hi"]),
    )
    cfg.validate()
    return cfg


def build_channel(cfg: ExperimentConfig):
    """Channel matrix, selected positions and Bob's projector set."""
    tm = medium.random_tm(cfg.m_spatial, derive_seed(cfg.seed, _TAG_TM))
    rng = np.random.default_rng(derive_seed(cfg.seed, _TAG_POSITIONS))
    positions = sorted(
        int(p) for p in rng.choice(cfg.m_spatial, cfg.n_positions, replace=False)
    )
    projectors = medium.bob_projector_set(tm, positions, cfg.input_mode)
    return tm, positions, projectors


def draw_alice_pair(cfg: ExperimentConfig, draw_index: int = 0):
    """Alice's two random bases (A, A') for one draw index."""
    rng = np.random.default_rng(
        np.random.SeedSequence((cfg.seed, _TAG_ALICE, int(draw_index)))
    )
    state_a, _ = random_alice_basis(rng)
    state_ap, _ = random_alice_basis(rng)
    return chsh.alice_basis(state_a, "A"), chsh.alice_basis(state_ap, "A'")


def run_dir(out: str | Path, seed: int) -> Path:
    path = Path(out) / f"run_{seed}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def chsh_enumeration(
    cfg: ExperimentConfig, draw_index: int = 0, noiseless: bool | None = None
) -> chsh.SEnumeration:
    """Full pipeline: channel, Alice draw, S enumeration (noisy or not)."""
    _, _, projectors = build_channel(cfg)
    alice_pair = draw_alice_pair(cfg, draw_index)
    if noiseless is None:
        noiseless = cfg.noiseless
    if noiseless:
        return chsh.enumerate_s(alice_pair, projectors, cfg.visibility)
    return stats.noisy_enumerate(alice_pair, projectors, cfg.visibility, cfg.acquisition)


def cmd_chsh(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = run_dir(args.out, cfg.seed)
    print(f"stage: channel ({cfg.m_spatial} spatial modes, seed {cfg.seed})")
    enumeration = chsh_enumeration(cfg)
    mode = "noiseless" if cfg.noiseless else "noisy"
    print(
        f"stage: enumeration ({len(enumeration.records)} records, "
        f"{enumeration.skipped} skipped, {mode}, visibility {cfg.visibility:g})"
    )
    chsh.write_srecords_csv(enumeration.records, out / "srecords.csv")
    rows = stats.histogram(
        [r.s for r in enumeration.records],
        cfg.hist_bin_width,
        (cfg.hist_lo, cfg.hist_hi),
    )
    stats.write_histogram_csv(rows, out / "histogram.csv")
    report = stats.certify(enumeration.records, enumeration.skipped)
    stats.write_report_json(report, out / "report.json")
    print(
        f"stage: certification (above 2: {report.above_2}, "
        f"by 5 sigma: {report.above_2_by_5sigma}, max S: {report.max_s:.4f})"
    )
    return 0


def cmd_hom(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = run_dir(args.out, cfg.seed)
    tm, positions, _ = build_channel(cfg)
    if not 0 <= args.position < len(positions):
        print(
            f"error: position must be in [0, {len(positions)}), got {args.position}",
            file=sys.stderr,
        )
        return 1
    setting = WaveplateSetting(
        math.radians(args.alice_hwp_deg), math.radians(args.alice_qwp_deg)
    )
    alice = waveplate_projection(setting, args.alice_detector)
    pol = medium.POL_H if args.bob_detector == 1 else medium.POL_V
    bob = medium.projector_from_tm(tm, positions[args.position], pol, cfg.input_mode)
    model = pairsource.DelayModel(cfg.coherence_length)
    curve = pairsource.hom_curve(
        alice, bob, model, cfg.visibility, npoints=args.points
    )
    k = 2 * args.position + (args.bob_detector - 1)
    path = out / f"hom_{k}.csv"
    pairsource.write_hom_csv(curve, path)
    print(f"stage: hom curve written to {path}")
    print(f"contrast: {curve.contrast:.6f}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    if args.alice_draws is not None:
        if args.alice_draws < 1:
            print("error: alice_draws must be >= 1", file=sys.stderr)
            return 1
        cfg = replace(cfg, alice_draws=args.alice_draws)
    try:
        nu_list = [float(x) for x in args.nus.split(",") if x.strip()]
    except ValueError:
        print(f"error: bad --nus list {args.nus!r}", file=sys.stderr)
        return 1
    if not nu_list:
        print("error: --nus list is empty", file=sys.stderr)
        return 1
    out = run_dir(args.out, cfg.seed)
    _, _, projectors = build_channel(cfg)
    print(
        f"stage: sweep over nu={nu_list} with {cfg.alice_draws} Alice draws (noiseless)"
    )
    summary = ["nu,draws,records_per_draw,mean_fraction_above_2"]
    edges = stats.histogram([], cfg.hist_bin_width, (cfg.hist_lo, cfg.hist_hi))
    for nu in nu_list:
        if not 0.0 <= nu <= 1.0:
            print(f"error: visibility must be in [0, 1], got {nu}", file=sys.stderr)
            return 1
        accum = np.zeros(len(edges))
        above = 0
        total = 0
        for draw in range(cfg.alice_draws):
            alice_pair = draw_alice_pair(cfg, draw)
            grid, defined = chsh.s_grid(alice_pair, projectors, nu)
            values = grid[np.ix_(defined, defined)].ravel()
            rows = stats.histogram(
                values, cfg.hist_bin_width, (cfg.hist_lo, cfg.hist_hi)
            )
            accum += np.array([r[2] for r in rows], dtype=float)
            above += int(np.count_nonzero(values > 2.0))
            total += values.size
        mean_counts = accum / cfg.alice_draws
        averaged = [
            (lo, hi, float(c))
            for (lo, hi, _), c in zip(edges, mean_counts)
        ]
        path = out / f"sweep_hist_nu_{nu:g}.csv"
        stats.write_histogram_csv(averaged, path)
        fraction = above / total if total else 0.0
        summary.append(
            f"{nu:.12g},{cfg.alice_draws},{total // cfg.alice_draws},{fraction:.12g}"
        )
        print(f"stage: nu={nu:g} done (mean fraction above 2: {fraction:.4%})")
    (out / "sweep_summary.csv").write_text("\n".join(summary) + "\n")
    return 0


def cmd_speckle(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = run_dir(args.out, cfg.seed)
    tm, _, _ = build_channel(cfg)
    states = {
        "H": PoincareState(0.0, 0.0),
        "V": PoincareState(math.pi, 0.0),
        "D": PoincareState(math.pi / 2, 0.0),
        "A": PoincareState(math.pi / 2, math.pi),
        "R": PoincareState(math.pi / 2, math.pi / 2),
        "L": PoincareState(math.pi / 2, 3 * math.pi / 2),
    }
    pattern = medium.speckle_intensity(
        tm, amplitude_vector(states[args.input_pol]), cfg.input_mode
    )
    path = out / "speckle.csv"
    medium.write_speckle_csv(pattern, path)
    print(f"stage: speckle pattern written to {path}")
    return 0


def cmd_tm(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = run_dir(args.out, cfg.seed)
    tm, _, _ = build_channel(cfg)
    path = out / "tm.txt"
    medium.save_tm(tm, path)
    print(f"stage: channel matrix written to {path}")
    return 0


def _config_help() -> str:
    lines = ["config file keys (key=value, '#' comments), with defaults:"]
    for key, default in CONFIG_DEFAULTS.items():
        lines.append(f"  {key} = {default}")
    return "\n".join(lines)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a key=value config file")
    parser.add_argument("--seed", type=int, help="master seed (64-bit)")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument(
        "--noiseless", action="store_true", help="skip Poisson counting noise"
    )
    parser.add_argument("--nu", type=float, help="override source visibility")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speckle-bell",
        description=(
            "Simulate Bell tests in which one photon of an entangled pair "
            "crosses a disordered polarization-mixing multimode channel."
        ),
        epilog=_config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chsh", help="full CHSH enumeration, histogram and report")
    _add_common(p)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("hom", help="delay scan for one output mode")
    _add_common(p)
    p.add_argument(
        "--position", type=int, default=0, help="index into the selected positions"
    )
    p.add_argument("--bob-detector", type=int, choices=(1, 2), default=1)
    p.add_argument(
        "--alice-hwp-deg", type=float, default=22.5, help="Alice HWP angle in degrees"
    )
    p.add_argument(
        "--alice-qwp-deg", type=float, default=0.0, help="Alice QWP angle in degrees"
    )
    p.add_argument("--alice-detector", type=int, choices=(1, 2), default=1)
    p.add_argument("--points", type=int, default=101, help="samples across the scan")
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("sweep", help="noiseless visibility sweep, averaged histograms")
    _add_common(p)
    p.add_argument(
        "--nus", default="0,0.93,1", help="comma-separated visibilities to sweep"
    )
    p.add_argument(
        "--alice-draws", type=int, default=None, help="random Alice draws per nu"
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("speckle", help="dump the output intensity pattern")
    _add_common(p)
    p.add_argument(
        "--input-pol", choices=("H", "V", "D", "A", "R", "L"), default="H"
    )
    p.set_defaults(func=cmd_speckle)

    p = sub.add_parser("tm", help="dump the channel matrix in text form")
    _add_common(p)
    p.set_defaults(func=cmd_tm)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
