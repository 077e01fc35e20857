"""QSL time versus the number of levels at eps0 = 10 and the beta(N) fit."""
from _common import parser, rows, run, workers_flag
from qsl_control.analysis import fit_beta_tau


def main():
    args = parser(__doc__).parse_args()
    out = run("sweep-n", "sweep_n.json", args.out / "sweep_n", *workers_flag(args))
    points = [(int(r["N"]), float(r["t_qsl"])) for r in rows(out / "results.csv") if r["status"] == "ok"]
    for n, t in points:
        print(f"  N={n}  t_qsl={t:.4f}  beta={t / ((n - 1) * 3.141592653589793):.3f}")
    fit = fit_beta_tau(points, 1.0)
    print(f"tau = {fit.tau:.4f}; fitted beta(N): " + ", ".join(f"{n}:{b:.3f}" for n, b in fit.beta_curve))


if __name__ == "__main__":
    main()
