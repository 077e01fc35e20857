"""QSL time versus level separation eps0 for processes I and II."""
from _common import parser, rows, run, workers_flag


def main():
    args = parser(__doc__).parse_args()
    for name in ("sweep_eps0_process_i", "sweep_eps0_process_ii"):
        out = run("sweep-eps0", f"{name}.json", args.out / name, *workers_flag(args))
        print(name)
        for r in rows(out / "results.csv"):
            print(f"  eps0={float(r['eps0']):6g}  t_qsl={float(r['t_qsl']):.4f}  t_sudden={float(r['t_sudden']):.4f}"
                  f"  ratio={float(r['ratio']):.3f}  {r['status']}")


if __name__ == "__main__":
    main()
