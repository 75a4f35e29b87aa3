"""Command-line front end: bound tables, protocol scans, figure datasets.

Every command emits deterministic CSV (header row, 12 significant digits,
UTF-8, LF) either to --out or to stdout.  Human-readable fit summaries go to
stderr for scan commands and to stdout for figure commands, whose CSV always
lands in a file.  Flags override a key = value config file, which overrides
built-in defaults.  Exit codes: 0 success, 2 usage or validation error,
1 computation error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bounds import (DELTA_E_OVER_H_C02_RB87, DELTA_JZ2_RB87, SpinDistribution,
                     kappa_to_c02, moments, qcrb_ghz, qcrb_product, qcrb_uniform)
from .protocols import (QptConfig, SmdConfig, default_kappa_grid,
                        default_t_grid, fit_scaling, qpt_noise_sweep,
                        scan_optimal_precision)

DEFAULTS = {
    "chi": 1.0,
    "c2": -1.0,
    "q0": 3.0,
    "qf": 3.0,
    "beta": 0.01,
    "big_t": 1.0,
    "eta": 1.0,
    "t_points": 200,
    "kappa_points": 101,
    "sigma": [0.0],
}

# Figure datasets: paper parameters, with grids dense enough that the scan
# minima are resolution-converged.  The scaling fits sample N = 10, 14, ...
# (even N with an odd pair number N/2), the subsequence on which the
# mixing-recombination protocols show their clean 1/N scaling.
FIT_N_LIST = list(range(10, 59, 4))
QPT_N_LIST = list(range(10, 41, 2))
FIGURE_T_POINTS = 800
FIG6_BETAS = [0.01, 0.05, 0.1]
FIG7_SIGMAS = [0.25 * i for i in range(11)]
FIG7_N_LIST = [10, 20, 30, 40]


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _write_csv(path: str | None, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _parse_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


class _Params:
    """Flag > config file > default resolution for one command invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = vars(args)
        config_path = self.args.get("config")
        self.config = _parse_config_file(config_path) if config_path else {}

    def get(self, key: str, cast=float):
        flag = self.args.get(key)
        if flag is not None:
            return flag
        if key in self.config:
            raw = self.config[key]
            return cast(raw)
        return DEFAULTS.get(key)

    def n_list(self, fallback: list[int] | None = None) -> list[int]:
        if self.args.get("n_list") is not None:
            return _ints(self.args["n_list"])
        if self.args.get("n") is not None:
            return [self.args["n"]]
        if "n_list" in self.config:
            return _ints(self.config["n_list"])
        if "n" in self.config:
            return [int(self.config["n"])]
        if fallback is not None:
            return fallback
        raise ValueError("no atom number given: pass --n or --n-list")

    def sigmas(self, fallback: list[float] | None = None) -> list[float]:
        if self.args.get("sigma") is not None:
            return _floats(self.args["sigma"])
        if "sigma" in self.config:
            return _floats(self.config["sigma"])
        return fallback if fallback is not None else DEFAULTS["sigma"]


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--n", type=int, help="single atom number")
    sub.add_argument("--n-list", help="comma-separated atom numbers")
    sub.add_argument("--chi", type=float, help="spin-exchange strength")
    sub.add_argument("--c2", type=float, help="spin-mixing rate (negative)")
    sub.add_argument("--q0", type=float, help="sweep start value")
    sub.add_argument("--qf", type=float, help="recombination sweep target")
    sub.add_argument("--beta", type=float, help="sweep rate")
    sub.add_argument("--sigma", help="comma-separated detection widths")
    sub.add_argument("--t-points", type=int, help="mixing-time grid size")
    sub.add_argument("--kappa-points", type=int, help="kappa grid size")
    sub.add_argument("--eta", type=float, help="number of trials in the bound")
    sub.add_argument("--big-t", type=float, help="interrogation time T")
    sub.add_argument("--out", help="output CSV path (default: stdout)")
    sub.add_argument("--config", help="key = value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsvsim",
        description="Precision bounds and three-mode interferometry scans "
                    "for LSV-coupling estimation")
    commands = parser.add_subparsers(dest="command", required=True)

    bounds_cmd = commands.add_parser("bounds", help="closed-form QCRB table")
    bounds_cmd.add_argument("--f", type=float, required=True, help="spin length F")
    bounds_cmd.add_argument("--family", choices=["product", "ghz", "uniform"],
                            default="product")
    bounds_cmd.add_argument("--dist", help="comma-separated sublevel amplitudes")
    _add_common_flags(bounds_cmd)

    for name, blurb in (("smd", "spin-mixing echo scan"),
                        ("superposition", "superposition-input scan"),
                        ("qpt", "sweep-interferometer scan"),
                        ("noise", "sweep scan with detection noise")):
        sub = commands.add_parser(name, help=blurb)
        _add_common_flags(sub)

    convert = commands.add_parser("convert", help="kappa to C0^(2) conversion")
    convert.add_argument("--kappa", type=float, required=True, help="LSV coupling, rad/s")
    convert.add_argument("--delta-e-over-hc", type=float,
                         default=DELTA_E_OVER_H_C02_RB87,
                         help="energy-shift ratio Delta_E/(h C0^(2)) in Hz")
    convert.add_argument("--delta-jz2", type=float, default=DELTA_JZ2_RB87,
                         help="angular-momentum fluctuation Delta(j_z^2)")
    convert.add_argument("--out", help="output CSV path (default: stdout)")

    figure = commands.add_parser("figure", help="reproduce a figure dataset")
    figure.add_argument("name", choices=["fig4a", "fig4b", "fig5a", "fig5b",
                                         "fig6", "fig7"])
    _add_common_flags(figure)

    return parser


def _bounds_rows(params: _Params, spin_f: float, family: str, dist_arg: str | None):
    if spin_f < 1:
        raise ValueError(f"spin length must be at least 1, got {spin_f}")
    big_t = params.get("big_t")
    eta = params.get("eta")
    if dist_arg is not None:
        dist = SpinDistribution(spin_f, np.array(_floats(dist_arg), dtype=complex))
    elif family == "product":
        dist = SpinDistribution.optimal_product(spin_f)
    elif family == "ghz":
        dist = SpinDistribution.optimal_ghz(spin_f)
    else:
        dist = SpinDistribution.uniform(spin_f)
    pair = moments(dist)
    rows = []
    for n in params.n_list():
        if family == "uniform":
            dk = qcrb_uniform(spin_f, n, big_t, eta)
        elif family == "ghz":
            dk = qcrb_ghz(dist, n, big_t, eta)
        else:
            dk = qcrb_product(dist, n, big_t, eta)
        rows.append((spin_f, n, family, pair.m2, pair.m4, dk))
    return rows


def _scan_grids(params: _Params):
    big_t = params.get("big_t")
    t_grid = default_t_grid(int(params.get("t_points", cast=int)))
    kappa_grid = default_kappa_grid(big_t, int(params.get("kappa_points", cast=int)))
    return big_t, t_grid, kappa_grid


def _report_fit(points, big_t: float, stream) -> None:
    if len(points) >= 3:
        fit = fit_scaling(points, big_t)
        print(f"fit: ln(delta_kappa_min * T) = {fit.slope:.6g} * ln(N) "
              f"+ {fit.intercept:.6g}  (rss = {fit.residual:.6g})", file=stream)


def _cmd_smd_family(protocol: str, params: _Params, out: str | None) -> None:
    big_t, t_grid, kappa_grid = _scan_grids(params)
    chi = params.get("chi")
    n_list = params.n_list()
    for n in n_list:  # validate every config before any scan starts
        SmdConfig(n, t=np.pi, chi=chi, big_t=big_t)
    rows = []
    points = []
    for n in n_list:
        res = scan_optimal_precision(protocol, n, t_grid, kappa_grid,
                                     chi=chi, big_t=big_t)
        rows.append((n, res.min_precision, res.t_opt, res.kappa_opt))
        points.append((n, res.min_precision))
    _write_csv(out, ["n_atoms", "delta_kappa_min", "t_opt", "kappa_opt"], rows)
    _report_fit(points, big_t, sys.stderr)


def _qpt_params(params: _Params):
    return dict(c2=params.get("c2"), q0=params.get("q0"), qf=params.get("qf"),
                beta=params.get("beta"), big_t=params.get("big_t"))


def _cmd_qpt(params: _Params, out: str | None) -> None:
    qp = _qpt_params(params)
    kappa_grid = default_kappa_grid(qp["big_t"], int(params.get("kappa_points", cast=int)))
    n_list = params.n_list()
    for n in n_list:
        QptConfig(n, c2=qp["c2"], q0=qp["q0"], qf=qp["qf"], beta=qp["beta"],
                  big_t=qp["big_t"])
    rows = []
    points = []
    for n in n_list:
        res = scan_optimal_precision("qpt", n, None, kappa_grid, **qp)
        rows.append((n, res.min_precision, res.kappa_opt, 1.0 / np.sqrt(n)))
        points.append((n, res.min_precision))
    _write_csv(out, ["n_atoms", "delta_kappa_min", "kappa_opt", "sql"], rows)
    _report_fit(points, qp["big_t"], sys.stderr)


def _cmd_noise(params: _Params, out: str | None) -> None:
    qp = _qpt_params(params)
    kappa_grid = default_kappa_grid(qp["big_t"], int(params.get("kappa_points", cast=int)))
    n_list = params.n_list()
    sigmas = params.sigmas()
    for n in n_list:
        QptConfig(n, c2=qp["c2"], q0=qp["q0"], qf=qp["qf"], beta=qp["beta"],
                  big_t=qp["big_t"])
    rows = []
    for n in n_list:
        for sigma, res in zip(sigmas, qpt_noise_sweep(n, sigmas, kappa_grid, **qp)):
            rows.append((n, sigma, res.min_precision, 1.0 / np.sqrt(n)))
    _write_csv(out, ["n_atoms", "sigma", "delta_kappa_min", "sql"], rows)


def _cmd_convert(args: argparse.Namespace) -> None:
    value = kappa_to_c02(args.kappa, args.delta_e_over_hc, args.delta_jz2)
    rows = [(args.kappa, args.delta_e_over_hc, args.delta_jz2, value)]
    print(f"# delta_e_over_h_c02 = {_fmt(args.delta_e_over_hc)} Hz, "
          f"delta_jz2 = {_fmt(args.delta_jz2)}", file=sys.stderr)
    _write_csv(args.out, ["kappa", "delta_e_over_h_c02", "delta_jz2", "c02"], rows)


def _cmd_figure(params: _Params, name: str, out: str | None) -> None:
    out = out or f"{name}.csv"
    big_t = params.get("big_t")
    kappa_grid = default_kappa_grid(big_t, int(params.get("kappa_points", cast=int)))
    if name in ("fig4a", "fig4b"):
        t_points = params.args.get("t_points") or int(
            params.config.get("t_points", FIGURE_T_POINTS))
        t_grid = default_t_grid(t_points)
        protocol = "smd_echo" if name == "fig4a" else "superposition"
        chi = params.get("chi")
        rows, points = [], []
        for n in params.n_list(FIT_N_LIST):
            res = scan_optimal_precision(protocol, n, t_grid, kappa_grid,
                                         chi=chi, big_t=big_t)
            rows.append((n, res.min_precision, res.t_opt, res.kappa_opt))
            points.append((n, res.min_precision))
        _write_csv(out, ["n_atoms", "delta_kappa_min", "t_opt", "kappa_opt"], rows)
        _report_fit(points, big_t, sys.stdout)
    elif name == "fig5a":
        qp = _qpt_params(params)
        rows, points = [], []
        for n in params.n_list(QPT_N_LIST):
            res = scan_optimal_precision("qpt", n, None, kappa_grid, **qp)
            rows.append((n, res.min_precision, res.kappa_opt, 1.0 / np.sqrt(n)))
            points.append((n, res.min_precision))
        _write_csv(out, ["n_atoms", "delta_kappa_min", "kappa_opt", "sql"], rows)
        _report_fit(points, qp["big_t"], sys.stdout)
    elif name == "fig5b":
        qp = _qpt_params(params)
        (n,) = params.n_list([20])
        res = scan_optimal_precision("qpt", n, None, kappa_grid, **qp)
        rows = list(zip(res.kappa_values, res.surface))
        _write_csv(out, ["kappa", "delta_kappa"], rows)
    elif name == "fig6":
        qp = _qpt_params(params)
        betas = [qp["beta"]] if params.args.get("beta") is not None else FIG6_BETAS
        (n,) = params.n_list([10])
        rows = []
        for beta in betas:
            res = scan_optimal_precision("qpt", n, None, kappa_grid,
                                         c2=qp["c2"], q0=qp["q0"], qf=qp["qf"],
                                         beta=beta, big_t=qp["big_t"])
            rows.extend((beta, k, dk) for k, dk in zip(res.kappa_values, res.surface))
        _write_csv(out, ["beta", "kappa", "delta_kappa"], rows)
    else:  # fig7
        qp = _qpt_params(params)
        if params.args.get("beta") is None and "beta" not in params.config:
            qp["beta"] = 0.05
        sigmas = params.sigmas(FIG7_SIGMAS)
        rows = []
        for n in params.n_list(FIG7_N_LIST):
            for sigma, res in zip(sigmas, qpt_noise_sweep(n, sigmas, kappa_grid, **qp)):
                rows.append((n, sigma, res.min_precision, 1.0 / np.sqrt(n)))
        _write_csv(out, ["n_atoms", "sigma", "delta_kappa_min", "sql"], rows)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "convert":
            _cmd_convert(args)
            return 0
        params = _Params(args)
        out = args.out
        if args.command == "bounds":
            rows = _bounds_rows(params, args.f, args.family, args.dist)
            _write_csv(out, ["spin_f", "n_atoms", "family", "m1", "m2",
                             "delta_kappa"], rows)
        elif args.command == "smd":
            _cmd_smd_family("smd_echo", params, out)
        elif args.command == "superposition":
            _cmd_smd_family("superposition", params, out)
        elif args.command == "qpt":
            _cmd_qpt(params, out)
        elif args.command == "noise":
            _cmd_noise(params, out)
        elif args.command == "figure":
            _cmd_figure(params, args.name, out)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))  # exits with code 2
    except Exception as exc:  # numerical failure during computation
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
