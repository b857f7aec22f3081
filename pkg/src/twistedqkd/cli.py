"""``twistedqkd`` command-line runner.

Exit status: 0 on success (and no protocol abort), 2 when the protocol
aborts because the QBER reached its threshold, 1 on any operational error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._io import atomic_write
from .config import ConfigError, ExperimentConfig, load_config
from .field import ModeSpec, apply_phase, make_mode, save_field
from .propagation import make_plan
from .protocols import ProtocolSpec, run_protocol
from .quantum import Channel, DetectionMatrix, detection_from_transfer, transfer_matrices
from .retrieval import characterize_frames, read_frame
from .tomography import IDENTITY_CHI, channel_chi, process_fidelity
from .turbulence import sample_screen, screen_sequence
from .vortex import detect, detections_to_csv, total_charge, track, tracks_to_csv
from .zernike import index_to_nm, save_screen

log = logging.getLogger("twistedqkd")

EXIT_OK, EXIT_ERROR, EXIT_ABORT = 0, 1, 2
FRAME_SUFFIXES = (".pgm", ".png")


class CliError(Exception):
    pass


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _require_seed(cfg: ExperimentConfig, what: str) -> None:
    if cfg.seed is None:
        raise ConfigError("seed", f"a seed is required for {what} (set seed: or pass --seed)")


class Run:
    """Output directory of one invocation; every file is written atomically."""

    def __init__(self, cfg: ExperimentConfig):
        if not cfg.out:
            raise ConfigError("out", "an output directory is required (set out: or pass --out)")
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, data) -> Path:
        return atomic_write(self.out / name, data)

    def save_config(self) -> None:
        doc = self.cfg.to_mapping()
        doc["out"] = None  # two runs into different directories should match byte for byte
        self.write("config.resolved.yaml", yaml.safe_dump(doc, sort_keys=True))


def _ensemble(cfg: ExperimentConfig) -> tuple:
    """Turbulence screens for the channel; empty for a turbulence-free link."""
    if cfg.turbulence.strength == 0:
        return ()
    _require_seed(cfg, "a turbulent channel")
    model = cfg.turbulence_model()
    rng = model.rng(0)
    grid = cfg.grid_spec()
    return tuple(sample_screen(model, grid, cfg.aperture_radius, rng)[0]
                 for _ in range(cfg.channel.ensemble_size))


def _channel(cfg: ExperimentConfig) -> Channel:
    return Channel(cfg.grid_spec(), cfg.beam.waist, cfg.channel.distance, cfg.medium_spec(),
                   cfg.beam.profile, _ensemble(cfg))


def _spec(cfg: ExperimentConfig) -> ProtocolSpec:
    try:
        return ProtocolSpec(cfg.protocol.kind, cfg.protocol.dimension)
    except ValueError as exc:
        raise ConfigError("protocol", str(exc)) from None


def cmd_characterize(cfg: ExperimentConfig, frames_dir: str | None) -> int:
    frames_dir = frames_dir or cfg.characterize.frames_dir
    if not frames_dir:
        raise ConfigError("characterize.frames_dir", "no frame directory given (or pass --frames)")
    directory = cfg.resolve(frames_dir) if frames_dir == cfg.characterize.frames_dir \
        else Path(frames_dir)
    if not directory.is_dir():
        raise CliError(f"frame directory {directory} does not exist")
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not paths:
        raise CliError(f"frame directory {directory} contains no .pgm or .png frames")
    frames = []
    for p in paths:
        try:
            frames.append(read_frame(p, cfg.characterize.dark_level))
        except Exception as exc:  # Pillow raises a zoo of exception types
            raise CliError(f"cannot read frame {p}: {exc}") from None
    run = Run(cfg)
    grid = cfg.grid_spec()
    gaussian = make_mode(ModeSpec(0, cfg.beam.waist, cfg.beam.profile), grid)
    for p, f in zip(paths, frames):
        if f.shape != (grid.samples_per_side,) * 2:
            raise CliError(f"frame {p} is {f.shape[1]}x{f.shape[0]}, the grid is "
                           f"{grid.samples_per_side}x{grid.samples_per_side}")
    max_j = cfg.characterize.max_j
    stats = characterize_frames(frames, gaussian, cfg.channel.distance, cfg.medium_spec(),
                                cfg.gsa_options(), max_j, aperture_radius=cfg.aperture_radius,
                                threads=cfg.threads)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame", "file", "residual", "converged"] + [f"a{j}" for j in stats.indices])
    for k, p in enumerate(paths):
        w.writerow([k, p.name, repr(float(stats.residuals[k])), bool(stats.converged[k])]
                   + [repr(float(a)) for a in stats.coefficients[k]])
    run.write("spectra.csv", buf.getvalue())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "n", "m", "mean", "std"])
    for j, mu, sd in zip(stats.indices, stats.mean, stats.std):
        n, m = index_to_nm(int(j))
        w.writerow([int(j), n, m, repr(float(mu)), repr(float(sd))])
    run.write("ensemble.csv", buf.getvalue())

    run.write("summary.json", _dumps({
        "frames": len(paths),
        "aperture_radius": cfg.aperture_radius,
        "distance": cfg.channel.distance,
        "converged_frames": int(stats.converged.sum()),
        "coefficients": [{"j": int(j), "mean": float(mu), "std": float(sd)}
                         for j, mu, sd in zip(stats.indices, stats.mean, stats.std)],
    }))
    run.save_config()
    return EXIT_OK


def _matrix_name(m: DetectionMatrix) -> str:
    return f"detection_{m.sent_basis}_{m.measured_basis}.csv"


def cmd_simulate_channel(cfg: ExperimentConfig) -> int:
    spec = _spec(cfg)
    channel = _channel(cfg)
    run = Run(cfg)
    bases = spec.make_bases(cfg.oam_labels())
    transfers = transfer_matrices(channel, bases[0].oam_labels)
    for sent in bases:
        for measured in bases:
            m = detection_from_transfer(transfers, sent, measured)
            run.write(_matrix_name(m), m.to_csv())
    grid = channel.grid
    if channel.screens:
        save_screen(channel.screens[0], run.out / "screen_000.f64")
    plan = make_plan(grid, channel.distance, channel.medium)
    for ell in bases[0].oam_labels:
        f = channel.mode(ell)
        if channel.screens:
            f = apply_phase(f, channel.screens[0])
        save_field(plan.apply(f), run.out / f"received_l{ell:+d}.f64")
    run.write("summary.json", _dumps({
        "oam_labels": list(bases[0].oam_labels),
        "bases": [b.label for b in bases],
        "ensemble_size": len(channel.screens),
        "distance": channel.distance,
        "grid": {"samples_per_side": grid.samples_per_side, "pitch": grid.pitch},
    }))
    run.save_config()
    return EXIT_OK


def cmd_run_protocol(cfg: ExperimentConfig) -> int:
    spec = _spec(cfg)
    shots = cfg.protocol.shots
    if cfg.protocol.matrices:
        source = []
        for k, name in enumerate(cfg.protocol.matrices):
            try:
                source.append(DetectionMatrix.from_csv(cfg.resolve(name).read_text()))
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"protocol.matrices[{k}]", f"unreadable matrix: {exc}") from None
    else:
        source = _channel(cfg)
    rng = None
    if shots is not None:
        _require_seed(cfg, "finite-shot sampling")
        rng = np.random.default_rng([cfg.seed, 1])
    report, matrices = run_protocol(spec, source, shots, rng, cfg.oam_labels())
    run = Run(cfg)
    for m in matrices:
        run.write(_matrix_name(m), m.to_csv())
    run.write("report.json", report.to_json())
    run.save_config()
    if report.abort:
        log.warning("QBER %.4f reached the %s d=%d threshold %.4f; no secret key", report.qber,
                    spec.kind, spec.dimension, report.threshold)
        return EXIT_ABORT
    return EXIT_OK


def cmd_tomography(cfg: ExperimentConfig) -> int:
    labels = tuple(cfg.protocol.oam_labels or (-1, 1))
    if len(labels) != 2:
        raise ConfigError("protocol.oam_labels", "process tomography needs a qubit (two OAM values)")
    channel = _channel(cfg)
    chi = channel_chi(channel, labels)
    run = Run(cfg)
    run.write("chi.json", chi.to_json())
    run.write("summary.json", _dumps({
        "oam_labels": list(labels),
        "process_fidelity": process_fidelity(chi, IDENTITY_CHI),
        "eigenvalues": [float(e) for e in chi.eigenvalues],
        "trace_preserving": chi.is_trace_preserving(),
        "ensemble_size": len(channel.screens),
    }))
    run.save_config()
    return EXIT_OK


def cmd_vortex_track(cfg: ExperimentConfig) -> int:
    v = cfg.vortex
    grid = cfg.grid_spec()
    mode = make_mode(ModeSpec(v.oam, cfg.beam.waist, cfg.beam.profile), grid)
    plan = make_plan(grid, cfg.channel.distance, cfg.medium_spec())
    if cfg.turbulence.strength == 0:
        fields = [plan.apply(mode)] * v.n_frames
    else:
        _require_seed(cfg, "a turbulent screen sequence")
        model = cfg.turbulence_model()
        screens = screen_sequence(model, v.n_frames, cfg.turbulence.correlation_time, grid,
                                  cfg.aperture_radius, model.rng(2))
        fields = [plan.apply(apply_phase(mode, s)) for s in screens]
    per_frame = [detect(f, v.intensity_floor) for f in fields]
    tracks = track(per_frame, v.max_step_waists * cfg.beam.waist)
    run = Run(cfg)
    run.write("detections.csv", detections_to_csv(per_frame))
    run.write("tracks.csv", tracks_to_csv(tracks))
    run.write("summary.json", _dumps({
        "oam": v.oam,
        "frames": v.n_frames,
        "frame_interval": 1.0 / cfg.turbulence_model().update_rate,
        "vortices_per_frame": [len(p) for p in per_frame],
        "total_charge_per_frame": [total_charge(p) for p in per_frame],
        "tracks": len(tracks),
        "track_lengths": [len(t) for t in tracks],
    }))
    run.save_config()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML experiment configuration")
    common.add_argument("--seed", type=int, metavar="N", help="seed for every random stream")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=int, metavar="N", help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="twistedqkd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("characterize", parents=[common],
                       help="retrieve and Zernike-fit turbulence from intensity frames")
    p.add_argument("--frames", metavar="DIR", help="directory of .pgm/.png frames")
    sub.add_parser("simulate-channel", parents=[common],
                   help="detection matrices for every basis pair through the channel")
    sub.add_parser("run-protocol", parents=[common], help="QBER, key rate and abort decision")
    sub.add_parser("tomography", parents=[common], help="qubit process matrix of the channel")
    sub.add_parser("vortex-track", parents=[common],
                   help="follow phase singularities through a screen sequence")
    return parser


COMMANDS = {
    "simulate-channel": cmd_simulate_channel,
    "run-protocol": cmd_run_protocol,
    "tomography": cmd_tomography,
    "vortex-track": cmd_vortex_track,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, {"seed": args.seed, "out": args.out,
                                        "threads": args.threads})
        if args.command == "characterize":
            return cmd_characterize(cfg, args.frames)
        return COMMANDS[args.command](cfg)
    except (ConfigError, CliError, ValueError, OSError) as exc:
        print(f"twistedqkd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
