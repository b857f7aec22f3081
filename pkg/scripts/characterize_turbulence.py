"""Synthesize frames from a known turbulence model, run the retrieval pipeline and compare.

    python3 scripts/characterize_turbulence.py --frames 143 --samples 512 --seed 0
"""

import argparse
import time

import numpy as np

from twistedqkd.field import GridSpec, ModeSpec, make_mode
from twistedqkd.propagation import water
from twistedqkd.retrieval import characterize_frames, forward_intensity
from twistedqkd.turbulence import default_model, load_model, spectrum_sequence
from twistedqkd.zernike import synthesize


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=143)
    ap.add_argument("--samples", type=int, default=256)
    ap.add_argument("--waist", type=float, default=1e-3)
    ap.add_argument("--wavelength", type=float, default=635e-9)
    ap.add_argument("--distance", type=float, default=3.0)
    ap.add_argument("--correlation-time", type=float, default=0.5)
    ap.add_argument("--model", help="turbulence YAML (default: packaged model)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    model = load_model(args.model) if args.model else default_model()
    grid = GridSpec.for_waist(args.waist, args.wavelength, samples_per_side=args.samples)
    beam = make_mode(ModeSpec(0, args.waist), grid)
    radius = 3 * args.waist
    spectra = spectrum_sequence(model, args.frames, args.correlation_time, radius,
                                model.rng(args.seed))
    frames = [forward_intensity(beam, synthesize(s, grid), args.distance, water(0.0))
              for s in spectra]
    # the drawn realization; correlated frames make its statistics differ from the model's
    injected = np.array([[s.coefficient(j) for j in range(1, 11)] for s in spectra])
    start = time.perf_counter()
    stats = characterize_frames(frames, beam, args.distance, water(0.0), aperture_radius=radius,
                                threads=args.threads)
    elapsed = time.perf_counter() - start

    truth = dict((j, (mu, sd)) for j, mu, sd in model.terms)
    print(f"{args.frames} frames at {args.samples}^2 in {elapsed:.1f} s")
    print(" j      model mean/std   |  injected mean/std  |  recovered mean/std")
    for k, (j, mu, sd) in enumerate(zip(stats.indices, stats.mean, stats.std)):
        m_mu, m_sd = truth.get(int(j), (0.0, 0.0))
        i_mu, i_sd = injected[:, k].mean(), injected[:, k].std(ddof=1)
        print(f"{int(j):2d}  {m_mu:+8.4f} {m_sd:7.4f}  | {i_mu:+8.4f} {i_sd:7.4f}  | "
              f"{mu:+8.4f} {sd:7.4f}")


if __name__ == "__main__":
    main()
