"""Command-line runs of the catalog checks, the eigen-search and the LHV fit.

Exit status: 0 when every registered expectation holds, 1 when one fails,
2 for usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import catalog, instances, search
from .catalog.report import InequalityReport
from .hilbert import HilbertSpace, State, embed, pauli
from .io import MomentFileError, dumps, load_moment_file
from .lhv import fit, fit_moments
from .moments import correlation_matrix, psd_check

DEFAULT_SEED = instances.DEFAULT_SEED
SEED_ENV = "QMOMENTS_SEED"
REFERENCE_LAMBDA_10 = -0.00287931


class UsageError(Exception):
    pass


@dataclass
class Outcome:
    """Payload for output plus the expectations checked on it."""

    payload: object
    text: list[str]
    failures: list[str] = field(default_factory=list)
    table: list[dict] | None = None

    def expect(self, ok: bool, message: str):
        if not ok:
            self.failures.append(message)


def resolve_seed(arg: int | None) -> int:
    if arg is not None:
        seed = arg
    elif os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer") from exc
    else:
        seed = DEFAULT_SEED
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    return seed


def _report_row(r: InequalityReport) -> dict:
    return {"name": r.name, "lhs": r.lhs, "rhs": r.rhs, "margin": r.margin, "violated": r.violated}


def _reports(reports, failures=None) -> Outcome:
    payload = [r.to_json() for r in reports]
    out = Outcome(payload[0] if len(payload) == 1 else payload, [r.summary() for r in reports], table=[_report_row(r) for r in reports])
    for f in failures or []:
        out.failures.append(f)
    return out


def _singlet_bell():
    sp = HilbertSpace.qubits(2)
    st = State.pure(sp, np.array([0, 1, -1, 0]) / math.sqrt(2))
    s1, s3 = pauli(1), pauli(3)
    A1, A2 = embed(s3, 0, sp), embed(s1, 0, sp)
    B1 = embed(-(s3 + s1) / math.sqrt(2), 1, sp)
    B2 = embed(-(s3 - s1) / math.sqrt(2), 1, sp)
    return st, A1, A2, B1, B2


def verify(name: str, seed: int) -> Outcome:
    if name == "ghz":
        r = catalog.ghz_test()
        out = _reports([r])
        d = r.details
        out.expect(
            r.applicable,
            f"premise failed: <(A+B)^2> = {d['sum_squares']} (expected 0 within 1e-12)",
        )
        out.expect(r.violated and abs(r.margin + 2) <= 1e-12, f"expected margin -2, got {r.margin!r}")
        return out
    if name == "mermin-peres":
        space = HilbertSpace.qubits(2)
        r = catalog.mp_inequality(State.maximally_mixed(space))
        out = _reports([r])
        out.expect(abs(r.lhs - 6) <= 1e-10 and abs(r.rhs - 3 * math.sqrt(3)) <= 1e-10, "expected lhs 6 and rhs 3*sqrt(3)")
        out.expect(r.violated, "expected a violation")
        return out
    if name == "appendix-d":
        r = catalog.appendix_d_test(seed=seed % 2**32)
        out = _reports([r])
        out.expect(abs(r.details["S"]) <= 1e-12, f"S = {r.details['S']!r}, expected 0")
        out.expect(abs(r.lhs - 8 * (math.sqrt(5) - 1)) <= 1e-10, f"Q = {r.lhs!r}, expected 8(sqrt5 - 1)")
        out.expect(r.details["commutation_residual"] <= 1e-12, "commutation residual above 1e-12")
        out.expect(r.violated, "expected a violation")
        return out
    if name == "tsirelson":
        r = catalog.tsirelson_check(*_singlet_bell())
        out = _reports([r])
        out.expect(abs(r.lhs - 2 * math.sqrt(2)) <= 1e-9 and abs(r.margin) <= 1e-9, "expected saturation at 2*sqrt(2)")
        out.expect(not r.violated, "weak-positivity bound must hold")
        return out
    raise UsageError(f"unknown check {name!r}")


def _random_pair(rng, space, slot):
    local = HilbertSpace((space.factor_dims[slot],))
    return embed(instances.random_hermitian(rng, local), slot, space), embed(instances.random_hermitian(rng, local), slot, space)


def _two_party_sweep(trials: int, dim: int, seed: int) -> InequalityReport:
    worst = None
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        d = int(rng.integers(2, dim + 1))
        space = HilbertSpace((d, d))
        st = instances.random_state(rng, space)
        A = [_random_pair(rng, space, 0) for _ in range(4)]
        B = [_random_pair(rng, space, 1) for _ in range(4)]
        r = catalog.cfrd_two_party(st, A, B)
        if worst is None or r.margin < worst.margin:
            worst = r
    return InequalityReport(
        "cfrd-two-party-sweep", worst.lhs, worst.rhs, seed=seed, params={"trials": trials, "dim": dim},
        details={"worst_margin": worst.margin},
    )


def _oscillator_sweep(trials: int, seed: int) -> InequalityReport:
    rng = np.random.default_rng(seed)
    worst = None
    for _ in range(trials):
        z = rng.random(int(rng.integers(1, 51)))
        if not z.any():
            continue
        r = catalog.oscillator_tripartite_bound(z)
        if worst is None or r.margin < worst.margin:
            worst = r
    return InequalityReport("cfrd-tripartite-oscillator-sweep", worst.lhs, worst.rhs, seed=seed, params={"trials": trials})


def _ghz_pairs(n):
    sp = HilbertSpace.qubits(n)
    psi = np.zeros(2**n)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return State.pure(sp, psi), [(embed(pauli(1), k, sp), embed(pauli(2), k, sp)) for k in range(n)]


def _read_z(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
        if isinstance(data, dict):
            data = data["z"]
        return np.asarray(data, dtype=float).reshape(-1)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        try:
            return np.array([float(x) for x in text.replace(",", " ").split()])
        except ValueError as exc:
            raise UsageError(f"{path}: expected a JSON list or whitespace-separated numbers") from exc


def cfrd(kind: str, args, seed: int) -> Outcome:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if kind == "two-party":
        if args.dim < 2 or args.dim > 4:
            raise UsageError("--dim must be between 2 and 4")
        r = _two_party_sweep(args.trials, args.dim, seed)
        out = _reports([r])
        out.expect(r.margin >= -1e-9, f"two-party CFRD violated at margin {r.margin!r}")
        return out
    if kind == "tri":
        st, pairs = _ghz_pairs(3)
        ghz = catalog.tripartite_cfrd(st, *pairs)
        osc = _oscillator_sweep(args.trials, seed)
        out = _reports([ghz, osc])
        out.expect(abs(ghz.lhs - 16) <= 1e-10 and abs(ghz.rhs - 8) <= 1e-10, "expected 16 vs 8")
        out.expect(osc.margin >= -1e-12, "oscillator tripartite bound violated")
        return out
    if kind == "quad":
        reports = []
        if args.z_file:
            z = _read_z(args.z_file)
        else:
            z = np.array(catalog.REFERENCE_Z)
            st, pairs = _ghz_pairs(4)
            reports.append(catalog.quadripartite_cfrd(st, *pairs))
        try:
            fock = catalog.quadripartite_cfrd(z=z, cutoff=args.cutoff)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        reports.append(fock)
        out = _reports(reports)
        if not args.z_file:
            ghz = reports[0]
            out.expect(abs(ghz.lhs - 64) <= 1e-10 and abs(ghz.rhs - 16) <= 1e-10, "expected 64 vs 16")
            out.expect(fock.violated, "reference z vector should violate the inequality")
        return out
    raise UsageError(f"unknown cfrd variant {kind!r}")


def run_search(args) -> Outcome:
    if args.sweep is not None:
        if args.sweep < 0:
            raise UsageError("--sweep must be >= 0")
        rows = search.cutoff_sweep(args.sweep)
        payload = json.loads(search.sweep_to_json(rows))
        text = [f"N={r.N:5d}  sign(det 4M)={r.det4M_sign:+d}  lambda_min={r.lambda_min:.12g}" for r in rows]
        out = Outcome(payload, text, table=payload["rows"])
        lam = [r.lambda_min for r in rows]
        out.expect(all(b <= a + 1e-12 for a, b in zip(lam, lam[1:])), "lambda_min not monotone in N")
        if args.sweep >= 10:
            out.expect(search.first_negative_determinant(rows) == 10, "first negative determinant should be N=10")
        return out
    N = 10 if args.cutoff is None else args.cutoff
    if N < 0:
        raise UsageError("--cutoff must be >= 0")
    res = search.min_eigenpair(N)
    _, det = catalog.m_matrix(N)
    payload = res.to_json()
    payload["det4M"] = str(det)
    text = [
        f"cutoff N = {N}",
        f"lambda_min = {res.lambda_min:.12g}",
        f"det(4M) = {det}",
        "z = " + " ".join(f"{x:.8g}" for x in res.vector),
        f"residual = {res.residual:.3e}  iterations = {res.iterations}",
    ]
    out = Outcome(payload, text, table=[{"n": i, "z": float(x)} for i, x in enumerate(res.vector)])
    if N == 10:
        out.expect(abs(res.lambda_min - REFERENCE_LAMBDA_10) <= 1e-8, f"lambda_min(10) = {res.lambda_min!r}")
        out.expect(
            float(np.max(np.abs(res.vector - np.array(catalog.REFERENCE_Z)))) <= 1e-5, "eigenvector differs from reference z"
        )
    return out


def lhv_fit(args) -> Outcome:
    try:
        mf = load_moment_file(args.moments)
    except MomentFileError as exc:
        raise UsageError(str(exc)) from exc
    mode = "noncontextual" if args.noncontextual else "contextual"
    lam = args.lam
    if lam != "auto":
        try:
            lam = float(lam)
        except ValueError as exc:
            raise UsageError("--lambda takes 'auto' or a positive number") from exc
    try:
        if mf.quantum:
            result = fit(mf.state, mf.obs, mode=mode, lam=lam)
        else:
            result = fit_moments(mf.second, mf.third, mf.means, mode=mode, lam=lam)
    except Exception as exc:  # pipeline failures carry their own diagnostics
        out = Outcome({"mode": mode, "error": f"{type(exc).__name__}: {exc}"}, [f"fit failed: {exc}"])
        out.failures.append(str(exc))
        return out
    payload = result.to_json()
    w = payload["worst"]
    text = [
        f"mode = {mode}",
        f"independent variables = {result.model.n}, peaks = {result.model.label_count}, lambda = {result.model.lam:.6g}",
        f"max residual = {result.max_residual:.3e} on {w['labels']} (quantum {w['quantum']:.12g}, model {w['model']:.12g})",
        "success" if result.success else "FAILED: measurable moments not reproduced",
    ]
    out = Outcome(payload, text)
    out.expect(result.success, f"max residual {result.max_residual:.3e} on {w['labels']}")
    return out


def report_all(seed: int) -> Outcome:
    parts = {}
    failures = []
    for name in ("ghz", "mermin-peres", "appendix-d", "tsirelson"):
        o = verify(name, seed)
        parts[f"verify {name}"] = o
    ns = argparse.Namespace(trials=200, dim=4, cutoff=None, z_file=None)
    for kind in ("two-party", "tri", "quad"):
        parts[f"cfrd {kind}"] = cfrd(kind, ns, seed)
    parts["search"] = run_search(argparse.Namespace(sweep=None, cutoff=10))
    parts["search sweep"] = run_search(argparse.Namespace(sweep=12, cutoff=None))
    for mode in ("contextual", "noncontextual"):
        st = catalog.ghz_state()
        obs = catalog.ghz_observables()
        res = fit(st, obs, mode=mode)
        o = Outcome(res.to_json(), [f"GHZ fit ({mode}): max residual {res.max_residual:.3e}"])
        if mode == "contextual":
            o.expect(res.success, "contextual GHZ fit should succeed")
        else:
            o.expect(abs(res.max_residual - 2) <= 1e-10, "noncontextual GHZ fit should miss by exactly 2")
        parts[f"lhv ghz {mode}"] = o
    rng = np.random.default_rng(seed)
    worst_psd = math.inf
    for _ in range(200):
        st, obs = instances.random_contextual_instance(rng)
        w, _ = psd_check(correlation_matrix(st, obs))
        worst_psd = min(worst_psd, float(w[0]))
    o = Outcome({"min_eigenvalue": worst_psd, "instances": 200}, [f"weak positivity: min eigenvalue {worst_psd:.3e} over 200 instances"])
    o.expect(worst_psd >= -1e-10, "correlation matrix not PSD")
    parts["weak positivity"] = o
    text = []
    for key, o in parts.items():
        text.append(f"== {key} ==")
        text.extend(o.text)
        failures.extend(f"{key}: {f}" for f in o.failures)
    payload = {"seed": seed, "sections": {k: o.payload for k, o in parts.items()}}
    return Outcome(payload, text, failures)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--seed", type=int, default=None, help=f"root seed (default {DEFAULT_SEED}, or ${SEED_ENV})")

    p = argparse.ArgumentParser(prog="qmoments", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run one catalog check")
    v.add_argument("check", choices=("ghz", "mermin-peres", "appendix-d", "tsirelson"))

    c = sub.add_parser("cfrd", parents=[common], help="CFRD-type inequalities")
    c.add_argument("variant", choices=("two-party", "tri", "quad"))
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--dim", type=int, default=4)
    c.add_argument("--cutoff", type=int, default=None)
    c.add_argument("--z-file", dest="z_file", default=None)

    s = sub.add_parser("search", parents=[common], help="lowest eigenpair of M")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--cutoff", type=int, default=None)
    g.add_argument("--sweep", type=int, default=None, metavar="N_MAX")

    lh = sub.add_parser("lhv", help="classical model construction")
    lsub = lh.add_subparsers(dest="lhv_command", required=True)
    f = lsub.add_parser("fit", parents=[common], help="fit a peaked LHV model to a moment file")
    f.add_argument("--moments", required=True)
    m = f.add_mutually_exclusive_group()
    m.add_argument("--contextual", action="store_true")
    m.add_argument("--noncontextual", action="store_true")
    f.add_argument("--lambda", dest="lam", default="auto")

    r = sub.add_parser("report", parents=[common], help="full reproduction bundle")
    r.add_argument("what", choices=("all",))
    return p


def render(out: Outcome, fmt: str) -> str:
    if fmt == "json":
        return dumps(out.payload) + "\n"
    if fmt == "csv":
        rows = out.table
        if not rows:
            raise UsageError("this command has no tabular output; use --format json or text")
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()
    lines = list(out.text)
    lines += [f"EXPECTATION FAILED: {f}" for f in out.failures]
    return "\n".join(lines) + "\n"


def dispatch(args) -> Outcome:
    seed = resolve_seed(args.seed)
    if args.command == "verify":
        return verify(args.check, seed)
    if args.command == "cfrd":
        return cfrd(args.variant, args, seed)
    if args.command == "search":
        return run_search(args)
    if args.command == "lhv":
        return lhv_fit(args)
    return report_all(seed)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = dispatch(args)
        text = render(out, args.format)
    except UsageError as exc:
        print(f"qmoments: error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    for f in out.failures:
        print(f"qmoments: expectation failed: {f}", file=sys.stderr)
    return 1 if out.failures else 0


if __name__ == "__main__":
    sys.exit(main())
