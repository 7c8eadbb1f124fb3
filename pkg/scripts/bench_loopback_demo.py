#!/usr/bin/env python3
"""End-to-end demo of the measurement side, entirely on loopback.

Starts the benchmark server on a fresh dataset, fires an interleaved
probe run plus a randomized-gap run against it, then summarizes the
records and fits latency models from them:

    python scripts/bench_loopback_demo.py [--count 60] [--outdir demo_out]

The randomized-gap run uses small gaps (this is a demo, not a spin-down
study); pass --max-gap to stretch it.
"""

import argparse
import json
from pathlib import Path

from fogassign.benchnet import (
    BenchTask,
    ProbeSchedule,
    ProbeTarget,
    make_dataset,
    probe,
    start_server,
    summarize,
)
from fogassign.characterize import estimate_cdf
from fogassign.latency import gev_from_quantiles


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=60)
    parser.add_argument("--max-gap", type=float, default=0.05)
    parser.add_argument("--outdir", default="demo_out")
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    dataset = make_dataset(outdir / "dataset.csv", seed=0)
    server, _thread = start_server(dataset, allow_out_of_range=True)
    print(f"server on {server.url}")
    try:
        interleaved = ProbeSchedule(
            targets=(
                ProbeTarget(server.url, BenchTask("pic", 2000)),
                ProbeTarget(server.url, BenchTask("psf", 500)),
                ProbeTarget(server.url, BenchTask("fsp", 500)),
            ),
            count=args.count,
        )
        rows = probe(interleaved, outdir / "interleaved.csv")
        print(f"interleaved run: {len(rows)} records -> {outdir / 'interleaved.csv'}")

        gapped = ProbeSchedule(
            targets=(ProbeTarget(server.url, BenchTask("pic", 2000)),),
            count=max(10, args.count // 3),
            mode="random",
            max_s=args.max_gap,
            seed=1,
        )
        rows += probe(gapped, outdir / "gapped.csv")
        print(f"randomized-gap run -> {outdir / 'gapped.csv'}")
    finally:
        server.shutdown()

    report = {}
    for (endpoint, option), stats in summarize(rows).items():
        report[f"{endpoint} {option}"] = stats
        print(
            f"{endpoint.rsplit('/', 1)[-1]:>4} {option:<12} n={stats['n']:<4} "
            f"median={stats['median'] * 1e3:7.2f} ms  "
            f"p10={stats['p10'] * 1e3:7.2f}  p90={stats['p90'] * 1e3:7.2f}  "
            f"sp={stats['sp'] * 1e3:6.2f}"
        )
        if stats["p10"] < stats["median"] < stats["p90"]:
            try:
                fit = gev_from_quantiles(stats["median"], stats["p10"], stats["p90"])
                report[f"{endpoint} {option}"]["gev_fit"] = fit.to_config()
                print(f"     quantile-matched heavy-tail fit: {fit.to_config()}")
            except ValueError as exc:
                print(f"     no heavy-tail fit: {exc}")

    ok_lat = [r.latency_s for r in rows if r.status == "ok"]
    est = estimate_cdf(ok_lat)
    report["pooled_ecdf_n"] = est.n
    (outdir / "report.json").write_text(json.dumps(report, indent=2, default=str))
    print(f"wrote {outdir / 'report.json'}")


if __name__ == "__main__":
    main()
