"""Command-line interface.

Subcommands: ``synth``, ``train``, ``track``, ``localize``, ``eval`` and
``demo-appendix``.  A plain ``key = value`` config file may supply any
subset of the flags; explicit flags override it.  Exit codes: 0 success,
1 usage error, 2 runtime failure, 3 target lost at the end of tracking.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import evaluate, global_seek, imgproc, ppk_svm, report, trackers
from .histogram import EPANECHNIKOV, GAUSSIAN, BinningScheme, compute_histogram
from .imgproc import SynthConfig, crop_region

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_LOST = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _pair(text):
    parts = [float(v) for v in text.replace("x", ",").split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers, got {text!r}")
    return (parts[0], parts[1])


def _color(text):
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected r,g,b, got {text!r}")
    return tuple(parts)


def _waypoints(text):
    pts = []
    for chunk in text.split(";"):
        x, y = chunk.split(",")
        pts.append((float(x), float(y)))
    return pts


def build_parser():
    parser = _Parser(prog="kbtrack", description=__doc__)
    parser.add_argument("--config", help="key = value file supplying default flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sequence dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--target-size", type=_pair, default=(12.0, 12.0))
    p.add_argument("--target-color", type=_color, default=(200, 40, 40))
    p.add_argument("--background-color", type=_color, default=(70, 110, 80))
    p.add_argument("--path", type=_waypoints, default=[(16.0, 16.0), (48.0, 48.0)])
    p.add_argument("--drift", type=float, default=0.0,
                   help="per-frame additive illumination drift")
    p.add_argument("--occluder", default=None,
                   help="x0,y0,w,h,first_frame,last_frame")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a batch SVM from crop directories")
    p.add_argument("--positives", required=True)
    p.add_argument("--negatives", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=16)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--kernel", choices=[EPANECHNIKOV, GAUSSIAN], default=EPANECHNIKOV)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("track", help="run a tracker over a dataset directory")
    p.add_argument("--dataset", required=True)
    p.add_argument("--tracker", choices=["generalized", "ms", "collins", "pf"],
                   default="generalized")
    p.add_argument("--model", help="model file (generalized/collins)")
    p.add_argument("--template-box", type=str, default=None,
                   help="cx,cy,hx,hy template crop from frame 0 (ms/pf)")
    p.add_argument("--init-box", type=str, default=None,
                   help="cx,cy,hx,hy start box; defaults to frame-0 ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=16)
    p.add_argument("--kernel", choices=[EPANECHNIKOV, GAUSSIAN], default=EPANECHNIKOV)
    p.add_argument("--no-update", action="store_true",
                   help="disable online model adaptation")
    p.add_argument("--negatives-per-frame", type=int, default=4)
    p.add_argument("--min-score-to-update", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.2)
    p.add_argument("--lambda-reg", type=float, default=0.1)
    p.add_argument("--buffer-cap", type=int, default=100)
    p.add_argument("--particles", type=int, default=1500)
    p.add_argument("--noise-std", type=float, default=4.0)
    p.add_argument("--lambda-lik", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--figures", default=None,
                   help="directory for report figures (default: alongside --out)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("localize", help="annealed cascade localization on one image")
    p.add_argument("--image", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--h0", type=_pair, default=None,
                   help="initial bandwidth; defaults to half the image")
    p.add_argument("--ratio", type=float, default=1.25)
    p.add_argument("--stages", type=int, default=12)
    p.add_argument("--start", type=_pair, default=None,
                   help="start point; defaults to the image center")
    p.add_argument("--kernel", choices=[EPANECHNIKOV, GAUSSIAN], default=GAUSSIAN)
    p.add_argument("--figures", default=None)
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("eval", help="evaluate a track file against ground truth")
    p.add_argument("--track", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--figures", default=None,
                   help="directory for report figures")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("demo-appendix",
                       help="show that modified MS with signed weights is non-stationary")
    p.add_argument("--centers", default="-2,2,0.3")
    p.add_argument("--weights", default="1,1,-1.2")
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--start", type=float, default=0.25)
    p.set_defaults(func=cmd_appendix)
    return parser


def _load_config_argv(path):
    """Translate ``key = value`` lines into leading argv flags so explicit
    flags override them."""
    argv = []
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "false"):
                if value.lower() == "true":
                    argv.append(flag)
            else:
                argv.extend([flag, value])
    return argv


def cmd_synth(args):
    cfg = SynthConfig(
        width=args.width, height=args.height, n_frames=args.frames,
        target_size=args.target_size, target_color=args.target_color,
        background_color=args.background_color, path=args.path,
        illumination_drift=args.drift, seed=args.seed,
    )
    if args.occluder:
        vals = [float(v) for v in args.occluder.split(",")]
        if len(vals) != 6:
            raise ValueError("--occluder expects x0,y0,w,h,first,last")
        cfg.occluder_rect = tuple(vals[:4])
        cfg.occluder_frames = (int(vals[4]), int(vals[5]))
    dataset = imgproc.synth_sequence(cfg)
    imgproc.save_dataset(args.out, dataset)
    print(f"wrote {len(dataset)} frames to {args.out}")
    return EXIT_OK


def _crop_histograms(dirpath, scheme, kernel):
    hists = []
    names = sorted(n for n in os.listdir(dirpath) if n.endswith((".ppm", ".png")))
    for name in names:
        img = imgproc.load_image(os.path.join(dirpath, name))
        h, w = img.shape[:2]
        center = ((w - 1) / 2.0, (h - 1) / 2.0)
        bandwidth = (max(w / 2.0, 1.0), max(h / 2.0, 1.0))
        region = crop_region(img, center, bandwidth)
        hists.append(compute_histogram(region, center, bandwidth, kernel, scheme))
    return hists


def cmd_train(args):
    scheme = BinningScheme(args.bins)
    pos = _crop_histograms(args.positives, scheme, args.kernel)
    neg = _crop_histograms(args.negatives, scheme, args.kernel)
    if not pos or not neg:
        raise ValueError("both --positives and --negatives must contain images")
    samples = pos + neg
    labels = [+1] * len(pos) + [-1] * len(neg)
    model = ppk_svm.train_batch(
        samples, labels,
        ppk_svm.TrainConfig(C=args.C, tolerance=args.tolerance),
        ppk_svm.PpkConfig(args.rho),
    )
    acc = ppk_svm.train_accuracy(model, samples, labels)
    ppk_svm.save_model(args.out, model)
    print(f"trained on {len(samples)} samples, {model.n_support} support vectors")
    print(f"train_accuracy {acc:.4f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _parse_box(text):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 4:
        raise ValueError("box must be cx,cy,hx,hy")
    return (vals[0], vals[1]), (vals[2], vals[3])


def _initial_box(args, dataset):
    if args.init_box:
        return _parse_box(args.init_box)
    gt0 = dataset.ground_truth[0]
    if gt0 is None:
        raise ValueError("no --init-box and no frame-0 ground truth")
    return (gt0[0], gt0[1]), (gt0[2], gt0[3])


def cmd_track(args):
    dataset = imgproc.load_dataset(args.dataset)
    scheme = BinningScheme(args.bins)
    center, bandwidth = _initial_box(args, dataset)
    rng = np.random.default_rng(args.seed)
    kernel = args.kernel

    state = trackers.TrackState(center=center, bandwidth=bandwidth, frame_index=0)
    record = evaluate.TrackRecord(centers=[center], bandwidths=[bandwidth],
                                  scores=[0.0], sequence_id=args.dataset)

    if args.tracker in ("generalized", "collins"):
        if not args.model:
            raise ValueError(f"--model is required for the {args.tracker} tracker")
        model = ppk_svm.load_model(args.model)
        if model.scheme != scheme:
            scheme = model.scheme
    else:
        if args.model:
            raise ValueError(f"--model is not used by the {args.tracker} tracker")
        tmpl_center, tmpl_bw = (_parse_box(args.template_box)
                                if args.template_box else (center, bandwidth))
        region = crop_region(dataset.frames[0], tmpl_center, tmpl_bw)
        q_target = compute_histogram(region, tmpl_center, tmpl_bw, kernel, scheme)

    if args.tracker == "generalized":
        policy = trackers.OnlineUpdatePolicy(
            enabled=not args.no_update,
            negatives_per_frame=args.negatives_per_frame,
            min_score_to_update=args.min_score_to_update,
        )
        norma = ppk_svm.NormaConfig(eta=args.eta, lambda_reg=args.lambda_reg,
                                    buffer_cap=args.buffer_cap)
        for frame in dataset.frames[1:]:
            state, model = trackers.track_frame_generalized(
                state, model, frame, policy=policy, kernel=kernel, rng=rng,
                norma_cfg=norma)
            _append(record, state)
    elif args.tracker == "collins":
        for frame in dataset.frames[1:]:
            state = trackers.track_frame_collins(state, model, frame, kernel=kernel)
            _append(record, state)
    elif args.tracker == "ms":
        for frame in dataset.frames[1:]:
            state = trackers.track_frame_ms(state, q_target, frame, kernel=kernel)
            _append(record, state)
    else:  # pf
        pf = trackers.PfState.init(center, count=args.particles)
        for frame in dataset.frames[1:]:
            pf, state = trackers.pf_step(pf, q_target, state, frame, kernel=kernel,
                                         noise_std=args.noise_std,
                                         lambda_lik=args.lambda_lik, rng=rng)
            _append(record, state)

    evaluate.save_track(args.out, record)
    print(f"wrote {args.out}")
    if any(gt is not None for gt in dataset.ground_truth):
        rep = evaluate.evaluate(record, dataset)
        sys.stdout.write(rep.to_text())
        if not args.no_figures:
            outdir = args.figures or os.path.dirname(os.path.abspath(args.out))
            for path in report.save_error_figures(rep, outdir):
                print(f"wrote {path}")
    return EXIT_LOST if state.lost else EXIT_OK


def _append(record, state):
    record.centers.append(state.center)
    record.bandwidths.append(state.bandwidth)
    record.scores.append(state.score)


def cmd_localize(args):
    image = imgproc.load_image(args.image)
    model = ppk_svm.load_model(args.model)
    h, w = image.shape[:2]
    h0 = args.h0 or (w / 2.0, h / 2.0)
    start = args.start or ((w - 1) / 2.0, (h - 1) / 2.0)
    schedule = global_seek.AnnealSchedule(h0=h0, ratio=args.ratio,
                                          max_stages=args.stages)
    result = global_seek.anneal_localize(model, image, start, schedule,
                                         kernel=args.kernel)
    for t in result.trace:
        print(f"{t.stage} {t.bandwidth[0]:.3f} {t.bandwidth[1]:.3f} "
              f"{t.center[0]:.3f} {t.center[1]:.3f} {t.score:.6f} "
              f"{int(t.accepted)}")
    print(f"accepted {int(result.accepted)} center {result.center[0]:.3f} "
          f"{result.center[1]:.3f} scale {result.scale[0]:.3f} {result.scale[1]:.3f}")
    if args.figures:
        for path in report.save_localize_figure(result, args.figures):
            print(f"wrote {path}")
    return EXIT_OK if result.accepted else EXIT_LOST


def cmd_eval(args):
    record = evaluate.load_track(args.track)
    dataset = imgproc.load_dataset(args.dataset)
    rep = evaluate.evaluate(record, dataset)
    sys.stdout.write(rep.to_text())
    if args.figures:
        for path in report.save_error_figures(rep, args.figures):
            print(f"wrote {path}")
    return EXIT_OK


def cmd_appendix(args):
    centers = tuple(float(v) for v in args.centers.split(","))
    weights = tuple(float(v) for v in args.weights.split(","))
    if len(centers) != len(weights):
        raise ValueError("--centers and --weights lengths differ")
    mixture = trackers.SignedMixture1D(centers=centers, weights=weights,
                                       bandwidth=args.bandwidth)
    rep = trackers.appendix_demo(mixture, start=args.start)
    print(f"collins_fixed_point {rep['collins_fixed_point']:.6f}")
    print(f"collins_gradient_norm {rep['collins_gradient_norm']:.6e}")
    print(f"lbfgs_point {rep['lbfgs_point']:.6f}")
    print(f"lbfgs_gradient_norm {rep['lbfgs_gradient_norm']:.6e}")
    print("maxima " + " ".join(f"{x:.6f}" for x in rep["maxima"]))
    print("minima " + " ".join(f"{x:.6f}" for x in rep["minima"]))
    print(f"nonstationary {int(rep['collins_nonstationary'])}")
    return EXIT_OK if rep["collins_nonstationary"] else EXIT_RUNTIME


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # peel --config first so its entries become overridable defaults
    if "--config" in argv:
        i = argv.index("--config")
        try:
            path = argv[i + 1]
        except IndexError:
            parser.error("--config requires a path")
        head, tail = argv[: i], argv[i + 2 :]
        try:
            config_argv = _load_config_argv(path)
        except (OSError, ValueError) as exc:
            sys.stderr.write(f"error: {exc}\n")
            return EXIT_USAGE
        # config flags go right after the subcommand name
        if head:
            argv = head[:1] + config_argv + head[1:] + tail
        else:
            argv = tail[:1] + config_argv + tail[1:]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
