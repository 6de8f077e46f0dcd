"""Regenerate the three latency trends and print them as text plots.

Sweeping the query range, the total request volume, and the coordinator
count reproduces the qualitative results the simulator is built around:

* wider query ranges hurt broadcast badly but barely touch coordination,
* more requests raise everyone's latency while the gap keeps growing,
* more coordinators shorten the wireless legs and lower the mean delay.

Three repetitions per cell keep this demo quick; the acceptance tests
rerun the same sweeps at ten. CSVs land in demos/output/.

Run:  python3 demos/latency_trends.py
"""

from pathlib import Path

from gridfog import default_sweep, emit_csv, emit_plot_data, run_sweep

OUT = Path(__file__).parent / "output"
BAR = 40


def show(title, series, unit):
    print(f"\n{title}")
    top = max(p.mean_latency_ms for pts in series.values() for p in pts)
    for arch in ("traditional", "coordinated"):
        if arch not in series:
            continue
        print(f"  {arch}:")
        for p in series[arch]:
            width = int(round(BAR * p.mean_latency_ms / top))
            print(f"    {p.swept_value:7.0f} {unit:<9} "
                  f"{'#' * width:<{BAR}} {p.mean_latency_ms:6.1f} ms "
                  f"(std {p.std_latency_ms:4.1f})")


def main():
    OUT.mkdir(exist_ok=True)
    for alias, title, unit in (
        ("range", "Query range vs. mean application delay", "m"),
        ("requests", "Request volume vs. mean application delay", "requests"),
        ("fnc", "Coordinator count vs. mean application delay", "FNCs"),
    ):
        table = run_sweep(default_sweep(alias, repetitions=3))
        path = OUT / f"sweep_{alias}.csv"
        emit_csv(table, path)
        show(title, emit_plot_data(table), unit)
        print(f"    -> {path}")


if __name__ == "__main__":
    main()
