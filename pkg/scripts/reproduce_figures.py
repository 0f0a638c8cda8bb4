"""Write the three landscape figures (SVG) and their data (CSV)."""
import argparse
from pathlib import Path

from circlescape import figures
from circlescape.cli import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="figures")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("fig1", "fig2", "fig3"):
        svg, data = getattr(figures, name)()
        (out / f"{name}.svg").write_text(svg)
        with open(out / f"{name}.csv", "w") as fh:
            write_csv(fh, {"figure": name}, data)
        print(out / f"{name}.svg")


if __name__ == "__main__":
    main()
