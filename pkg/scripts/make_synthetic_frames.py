"""Write a directory of synthetic camera frames: a Gaussian beam through evolving turbulence.

    python3 scripts/make_synthetic_frames.py OUT_DIR --frames 143 --samples 512 --seed 0
"""

import argparse
from pathlib import Path

from twistedqkd.field import GridSpec, ModeSpec, make_mode
from twistedqkd.propagation import water
from twistedqkd.retrieval import forward_intensity, write_frame
from twistedqkd.turbulence import default_model, load_model, screen_sequence


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--frames", type=int, default=143)
    ap.add_argument("--samples", type=int, default=512)
    ap.add_argument("--waist", type=float, default=1e-3)
    ap.add_argument("--wavelength", type=float, default=635e-9)
    ap.add_argument("--distance", type=float, default=3.0)
    ap.add_argument("--aperture-waists", type=float, default=3.0)
    ap.add_argument("--correlation-time", type=float, default=0.5)
    ap.add_argument("--model", help="turbulence YAML (default: packaged model)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    model = load_model(args.model) if args.model else default_model()
    grid = GridSpec.for_waist(args.waist, args.wavelength, samples_per_side=args.samples)
    beam = make_mode(ModeSpec(0, args.waist), grid)
    screens = screen_sequence(model, args.frames, args.correlation_time, grid,
                              args.aperture_waists * args.waist, model.rng(args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, screen in enumerate(screens):
        write_frame(out / f"frame_{k:04d}.pgm", forward_intensity(beam, screen, args.distance, water(0.0)))
    print(f"wrote {len(screens)} frames to {out}")


if __name__ == "__main__":
    main()
