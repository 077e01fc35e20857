"""Eigenenergies versus the control parameter for N=3 and N=5."""
from _common import parser, run


def main():
    args = parser(__doc__).parse_args()
    for name in ("spectrum_n3", "spectrum_n5"):
        out = run("spectrum", f"{name}.json", args.out / name)
        print(out / "spectrum.csv")


if __name__ == "__main__":
    main()
