"""``qinspired`` command-line driver.

Exit codes: 0 success, 1 verification failure, 2 data error, 3 numerical
abort, 64 usage error. Every command writes ``manifest.json`` into its
output directory; ``qinspired rerun <manifest>`` replays the recorded config.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, closedform, kernels, qsim, recursions
from .errors import DomainError, FormatError, NumericalError, SizeError

EXIT_OK, EXIT_VERIFY, EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 3, 64

ACTIVATIONS = ("af1", "af2", "af3", "af4", "af5", "f1", "f2", "f3")
DATASETS = ("mnist", "fmnist", "letter")
SUITES = ("qc1", "qc2", "prop1", "xconj", "prop2")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# --- manifest --------------------------------------------------------------

def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def write_json_atomic(path: Path, payload: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _config(args) -> dict:
    skip = {"func", "manifest"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _run_config(args) -> dict:
    """Settings stored in checkpoints; the output location is left out."""
    drop = {"out", "resume", "command"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in _config(args).items() if k not in drop}


# --- verify ----------------------------------------------------------------

def _suite_rows(args):
    """Yield (suite, n-range, max deviation) rows for the selected suites."""
    rng = np.random.default_rng(args.seed)
    draws = args.draws
    if "qc1" in args.suite:
        dev, sizes = 0.0, range(1, args.max_n + 1)
        for n in sizes:
            for _ in range(draws):
                theta, x = rng.uniform(-np.pi, np.pi, n), rng.uniform(0, 1, n)
                ref = qsim.run_qc1(x, theta)
                dev = max(dev, abs(closedform.o_qc1_closed(closedform.angle_vector(theta, x)) - ref))
        yield "qc1", f"1..{args.max_n}", dev
    if "qc2" in args.suite:
        dev = 0.0
        for n in range(3, args.max_n + 1):
            for _ in range(draws):
                theta, x = rng.uniform(-np.pi, np.pi, n), rng.uniform(0, 1, n)
                ref = qsim.run_qc2(x, theta)
                dev = max(dev, abs(closedform.o_qc2_closed(closedform.angle_vector(theta, x)) - ref))
        yield "qc2", f"3..{args.max_n}", dev
    top = min(args.max_n, 10)
    if "prop1" in args.suite:
        dev = 0.0
        for n in range(3, top + 1):
            for _ in range(args.recursion_draws):
                full, rec, _ = recursions.qc1_peel(rng.uniform(-np.pi, np.pi, n))
                dev = max(dev, abs(full - rec))
        yield "prop1", f"3..{top}", dev
    if "xconj" in args.suite:
        dev = 0.0
        for n in range(1, top + 1):
            for _ in range(args.recursion_draws):
                lhs, rhs = recursions.x_conjugation(rng.uniform(-np.pi, np.pi, n))
                dev = max(dev, abs(lhs - rhs))
        yield "xconj", f"1..{top}", dev
    if "prop2" in args.suite:
        dev = 0.0
        for n in range(3, top + 1):
            for _ in range(args.recursion_draws):
                alphas = rng.uniform(-np.pi, np.pi, n)
                A, B = recursions.qc2_branch_moments(alphas)
                dev = max(dev, abs(A[-1] - B[-1] - recursions.qc2_chain_output(alphas)))
                for k in range(n - 1):
                    dev = max(dev, abs(A[k + 1] + B[k + 1] - (A[k] - B[k])))
                    dev = max(dev, abs(A[k + 1] - B[k + 1] - np.cos(alphas[k + 1]) * (A[k] + B[k])))
        yield "prop2", f"3..{top}", dev


def cmd_verify(args) -> int:
    if args.max_n < 3 or args.max_n > qsim.MAX_QUBITS:
        raise UsageError(f"--max-n must lie in 3..{qsim.MAX_QUBITS}")
    failed = False
    print(f"{'suite':<8}{'n-range':<10}{'max deviation':<16}status")
    for suite, span, dev in _suite_rows(args):
        ok = dev <= args.tolerance
        failed |= not ok
        print(f"{suite:<8}{span:<10}{dev:<16.3e}{'pass' if ok else 'FAIL'}")
    if "qc2" in args.suite:
        rows = closedform.qc2_discrepancy(range(3, args.max_n + 1), draws=min(args.draws, 20), seed=args.seed)
        report = args.out / "qc2_discrepancy.tsv"
        closedform.write_qc2_discrepancy_report(report, rows)
        print(f"qc2 printed-vs-simulated report: {report}")
    return EXIT_VERIFY if failed else EXIT_OK


# --- train-cnn -------------------------------------------------------------

def _history_rows(report_records):
    return [[r.epoch, r.train_loss, r.train_acc, r.test_loss, r.test_acc] for r in report_records]


def cmd_train_cnn(args) -> int:
    from . import checkpoint, datasets, nngine

    train_set, test_set = datasets.load_split(args.dataset, args.train, args.test, args.seed, args.data_dir)
    history = []
    if args.resume:
        ckpt = checkpoint.load_checkpoint(args.resume)
        model = nngine.from_checkpoint(ckpt)
        if model.config.activation != args.activation:
            raise UsageError(f"checkpoint was trained with {model.config.activation}, not {args.activation}")
        start = ckpt.epoch
        history = [nngine.EpochRecord(int(h[0]), *h[1:]) for h in ckpt.meta.get("history", [])]
    else:
        config = nngine.CnnConfig(channels=args.channels, hidden=args.hidden, activation=args.activation)
        model = nngine.CnnModel.create(config, args.seed)
        start = 0
    if args.epochs < start:
        raise UsageError(f"--epochs {args.epochs} is below the checkpoint epoch {start}")
    run = _run_config(args)

    def on_epoch(record, mdl):
        history.append(record)
        final = record.epoch == args.epochs
        if final or (args.checkpoint_every and record.epoch % args.checkpoint_every == 0):
            ckpt = nngine.to_checkpoint(mdl, record.epoch, record, run)
            ckpt.meta["history"] = _history_rows(history)
            checkpoint.save_checkpoint(args.out / f"epoch-{record.epoch:03d}.ckpt", ckpt)

    nngine.train(
        model, train_set, test_set, args.epochs - start, args.batch, args.lr, args.seed,
        start_epoch=start, on_epoch=on_epoch, log=print,
    )
    nngine.write_metrics_csv(args.out / "metrics.csv", history)
    best = nngine.TrainReport(history).optimal
    print(
        f"optimal epoch {best.epoch}: train_acc={best.train_acc:.4f} test_acc={best.test_acc:.4f} "
        f"test_loss={best.test_loss:.4f}"
    )
    return EXIT_OK


# --- train-qcpn ------------------------------------------------------------

def cmd_train_qcpn(args) -> int:
    from . import checkpoint, nngine, qcpn

    target = qcpn.parse_target(args.target)
    domain = tuple(args.domain) if args.domain else None
    data = qcpn.gen_dataset(target, args.train, args.test, domain, args.seed)
    dim = qcpn.target_dim(target)
    terms = args.units if dim == 1 else args.terms
    run = _run_config(args)
    runs = [("", qcpn.HybridQcpn.create(terms, dim, args.order, data.domains, args.seed), qcpn.train_qcpn)]
    if args.baseline:
        runs.append(("baseline-", qcpn.BaselineNn.create(dim, args.hidden, data.domains, args.seed), qcpn.train_baseline))
    for prefix, model, trainer in runs:
        name = "baseline" if prefix else "qcpn"
        report = trainer(model, data, args.epochs, args.lr, args.seed, args.batch)
        nngine.write_metrics_csv(args.out / f"{prefix}metrics.csv", report.records)
        qcpn.write_predictions_csv(args.out / f"{prefix}predictions.csv", model, data.x_test, data.y_test)
        last = report.records[-1]
        ckpt = qcpn.to_checkpoint(model, last.epoch, last, run)
        ckpt.meta["history"] = _history_rows(report.records)
        checkpoint.save_checkpoint(args.out / f"{prefix}final.ckpt", ckpt)
        print(f"{name} {target}: final test MSE {last.test_loss:.6e} (train {last.train_loss:.6e})")
    return EXIT_OK


# --- features --------------------------------------------------------------

def cmd_features(args) -> int:
    from . import checkpoint, datasets, nngine

    ckpt = checkpoint.load_checkpoint(args.checkpoint)
    model = nngine.from_checkpoint(ckpt)
    cfg = model.config
    if args.blank:
        image = np.zeros((cfg.image_size, cfg.image_size))
    else:
        ckpt_cfg = ckpt.config
        _, test_set = datasets.load_split(
            ckpt_cfg.get("dataset", "mnist"), ckpt_cfg.get("train", 1), ckpt_cfg.get("test", 1),
            ckpt_cfg.get("seed", 0), args.data_dir or ckpt_cfg.get("data_dir"),
        )
        if not 0 <= args.index < len(test_set):
            raise IndexError(f"image index {args.index} outside 0..{len(test_set) - 1}")
        image = test_set.images[args.index]
    maps = nngine.conv_forward(model, image[None])[0]
    for c in range(cfg.channels):
        np.savetxt(args.out / f"feature-{c:02d}.csv", maps[:, :, c], delimiter=",", fmt="%.17g")
    params = model.params["conv"]
    kind = cfg.kind
    if kind.is_quantum:
        np.savetxt(args.out / "angles.csv", params, delimiter=",", fmt="%.17g")
        for c, row in enumerate(params):
            wrapped = np.mod(row + np.pi, 2 * np.pi) - np.pi
            gap = np.abs(np.abs(wrapped) - np.pi / 2)
            i = int(np.argmin(gap))
            print(f"channel {c:2d}: site {i + 1} angle {wrapped[i]:+.4f} (|angle| - pi/2 = {np.abs(wrapped[i]) - np.pi / 2:+.2e})")
    else:
        np.savetxt(args.out / "weights.csv", params, delimiter=",", fmt="%.17g")
        print(f"wrote {cfg.channels} weight rows (last column is the bias)")
    return EXIT_OK


# --- project ---------------------------------------------------------------

def cmd_project(args) -> int:
    if not 3 <= args.qubits <= 8:
        raise UsageError("--qubits must lie in 3..8")
    n = args.qubits
    K = (n - 1) * (n - 2)
    samples = args.samples or max(4 * K, 32)
    rng = np.random.default_rng(args.seed)
    theta = rng.uniform(-np.pi, np.pi, qsim.qcpn_theta_size(n))
    xs = closedform.chebyshev_nodes(samples)
    ys = np.array([qsim.run_qcpn_circuit(x, theta, n) for x in xs])
    coeffs, res_k = closedform.chebyshev_project(xs, ys, K)
    _, res_below = closedform.chebyshev_project(xs, ys, K - 1)
    print(f"qubits {n}: K = {K}")
    print(f"residual at K   = {res_k:.3e}")
    print(f"residual at K-1 = {res_below:.3e}")
    with open(args.out / "coefficients.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["order", "coefficient"])
        for k, c in enumerate(coeffs):
            writer.writerow([k, "%.17g" % c])
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def _lower(choices):
    def convert(text):
        value = text.lower()
        if value not in choices:
            raise argparse.ArgumentTypeError(f"invalid choice {text!r} (choose from {', '.join(choices)})")
        return value

    return convert


def build_parser() -> argparse.ArgumentParser:
    from .qcpn import TARGETS

    parser = Parser(prog="qinspired", description="Quantum-inspired filters, circuits and Chebyshev networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def common(p, name):
        p.add_argument("--out", type=Path, default=Path("qinspired-out") / name, help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify", help="closed forms and recursions against the statevector simulator")
    common(p, "verify")
    p.add_argument("--suite", type=_lower(SUITES + ("all",)), action="append", help="repeatable; default all")
    p.add_argument("--max-n", type=int, default=12)
    p.add_argument("--draws", type=int, default=100, help="random draws per n for the closed forms")
    p.add_argument("--recursion-draws", type=int, default=50)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("train-cnn", help="train the quantum-filter CNN on an IDX corpus")
    common(p, "train-cnn")
    p.add_argument("--dataset", type=_lower(DATASETS), default="mnist")
    p.add_argument("--activation", type=_lower(ACTIVATIONS), default="af3")
    p.add_argument("--train", type=int, default=8000)
    p.add_argument("--test", type=int, default=2000)
    p.add_argument("--epochs", type=int, default=5, help="final epoch number (also when resuming)")
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--checkpoint-every", type=int, default=1, help="0 keeps only the final checkpoint")
    p.add_argument("--data-dir", default=None, help="defaults to $QINSPIRED_DATA or ./data")
    p.add_argument("--resume", type=Path, default=None)
    p.set_defaults(func=cmd_train_cnn)

    p = sub.add_parser("train-qcpn", help="fit a Chebyshev network to a special-function target")
    common(p, "train-qcpn")
    p.add_argument("--target", type=_lower(tuple(t.lower() for t in TARGETS)), default="p5")
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--units", type=int, default=2, help="units for single-input targets")
    p.add_argument("--terms", type=int, default=10, help="product terms for two-input targets")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--train", type=int, default=5000)
    p.add_argument("--test", type=int, default=1000)
    p.add_argument("--domain", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    p.add_argument("--baseline", action="store_true", help="also train the tanh baseline")
    p.add_argument("--hidden", type=int, default=16, help="baseline hidden width")
    p.set_defaults(func=cmd_train_qcpn)

    p = sub.add_parser("features", help="export first-layer feature maps and trained filter parameters")
    common(p, "features")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--index", type=int, help="test-split image index")
    group.add_argument("--blank", action="store_true", help="use an all-zero image")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("project", help="Chebyshev projection of the circuit-backed unit")
    common(p, "project")
    p.add_argument("--qubits", type=int, default=4)
    p.add_argument("--samples", type=int, default=0, help="Chebyshev nodes; 0 picks max(4K, 32)")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("rerun", help="replay the config recorded in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, default=None, help="override the recorded output directory")
    p.set_defaults(func=None)
    return parser


COMMANDS = {
    "verify": cmd_verify,
    "train-cnn": cmd_train_cnn,
    "train-qcpn": cmd_train_qcpn,
    "features": cmd_features,
    "project": cmd_project,
}


def _restore(config: dict) -> argparse.Namespace:
    args = argparse.Namespace(**config)
    for key in ("out", "resume", "checkpoint"):
        if getattr(args, key, None) is not None:
            setattr(args, key, Path(getattr(args, key)))
    args.func = COMMANDS[args.command]
    return args


def _run(args) -> int:
    if args.command == "verify" and (args.suite is None or "all" in args.suite):
        args.suite = list(SUITES)
    args.out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": args.command,
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in _config(args).items()},
        "seed": getattr(args, "seed", None),
        "out_dir": str(args.out),
        "started": _now(),
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
    }
    try:
        status = args.func(args)
    except UsageError as exc:
        print(f"qinspired: error: {exc}", file=sys.stderr)
        status = EXIT_USAGE
    except (FileNotFoundError, FormatError, SizeError, IndexError, DomainError) as exc:
        print(f"qinspired: data error: {exc}", file=sys.stderr)
        status = EXIT_DATA
    except NumericalError as exc:
        print(f"qinspired: numerical error: {exc}", file=sys.stderr)
        status = EXIT_NUMERIC
    manifest.update(finished=_now(), exit_status=status)
    write_json_atomic(args.out / "manifest.json", manifest)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        try:
            recorded = json.loads(args.manifest.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"qinspired: data error: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_DATA
        replay = _restore(dict(recorded["config"], command=recorded["command"]))
        if args.out is not None:
            replay.out = args.out
        return _run(replay)
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
