"""QSL time versus the second gap at eps0 = 5, with the beta * T_S fit."""
import math

from _common import parser, rows, run, workers_flag
from qsl_control.analysis import gap_scaling_fit


def main():
    args = parser(__doc__).parse_args()
    out = run("sweep-gap", "sweep_gap.json", args.out / "sweep_gap", *workers_flag(args))
    points = [(float(r["delta_b"]), float(r["t_qsl"])) for r in rows(out / "results.csv") if r["status"] == "ok"]
    for db, t in points:
        print(f"  delta_b={db:5g}  t_qsl={t:.4f}  ratio={t / (math.pi + math.pi / db):.3f}")
    beta, resid = gap_scaling_fit(points, 1.0)
    print(f"beta = {beta:.4f}, max |relative residual| = {max(map(abs, resid)):.4f}")


if __name__ == "__main__":
    main()
