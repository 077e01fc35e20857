"""Optimized process-II fields: populations at the QSL and the field spectrum versus eps0.

For each eps0 the QSL scan is run, the shortest converged field is written
out, and its oscillation frequency and amplitude are extracted.
"""
import json

from _common import parser, run
from qsl_control.analysis import linearity_check
from qsl_control.krotov import KrotovRecord
from qsl_control.tables import write_csv


def main():
    p = parser(__doc__)
    p.add_argument("--eps0", type=float, nargs="+", default=[5.0, 10.0, 20.0])
    args = p.parse_args()
    summary = []
    for eps0 in args.eps0:
        base = args.out / f"field_eps0_{eps0:g}"
        system = {"n_levels": 3, "gaps": [1.0, 1.0], "spacing": eps0}
        scan_dir = run("qsl-scan", "scan_process_ii.json", base / "scan", overrides={"system": system})
        record = KrotovRecord.from_dict(json.loads((scan_dir / "record_converged.json").read_text()))
        field = record.final_field
        field_csv = write_csv(base / "field.csv", ["t", "lambda"], zip(field.grid.midpoints, field.values))
        run("analyze-field", "scan_process_ii.json", base / "spectrum", field_csv, overrides={"system": system})
        info = json.loads((base / "spectrum" / "field_summary.json").read_text())
        summary.append((eps0, info["dominant_frequency"], info["max_amplitude"]))
        print(f"eps0={eps0:g}: T={field.grid.duration:.4f}  f={info['dominant_frequency']:.4f} "
              f"(eps0/2pi={info['expected_frequency']:.4f}, bin {info['bin_width']:.4f})  A_max={info['max_amplitude']:.3f}")
    if len(summary) >= 3:
        slope, _, r2 = linearity_check([(e, f) for e, f, _ in summary])
        print(f"f vs eps0: slope={slope:.4f} r2={r2:.4f}")
        slope, _, r2 = linearity_check([(e, a) for e, _, a in summary])
        print(f"A_max vs eps0: slope={slope:.4f} r2={r2:.4f}")
    # populations of the headline configuration
    out = run("optimize", "optimize_headline.json", args.out / "optimize_headline")
    print(out / "populations.csv")


if __name__ == "__main__":
    main()
