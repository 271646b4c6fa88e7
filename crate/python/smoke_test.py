#!/usr/bin/env python3
"""Smoke test for the lobnet Python bindings.

Builds nothing itself: it locates the compiled extension
(target/release or target/debug of the workspace), copies it into a
temporary directory under the importable name, and drives the main
types end to end.

Build the module first with:

    cargo build --release -p lobnet-py --features extension-module

then run:

    python3 python/smoke_test.py
"""

import math
import pathlib
import shutil
import sys
import tempfile


def import_lobnet():
    root = pathlib.Path(__file__).resolve().parent.parent
    candidates = [
        root / "target" / "release" / "liblobnet.so",
        root / "target" / "debug" / "liblobnet.so",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit(
            "liblobnet.so not found; build it with\n"
            "  cargo build --release -p lobnet-py --features extension-module"
        )
    stage = pathlib.Path(tempfile.mkdtemp(prefix="lobnet_py_"))
    shutil.copy2(built, stage / "lobnet.so")
    sys.path.insert(0, str(stage))
    import lobnet

    return lobnet


def check(name, condition, detail=""):
    status = "ok" if condition else "FAIL"
    print(f"  [{status}] {name}" + (f" ({detail})" if detail else ""))
    if not condition:
        raise AssertionError(name)


def main():
    lobnet = import_lobnet()
    print(f"imported lobnet from {lobnet.__file__}")

    # Order book: the snapshot fixture with tick 0.1.
    book = lobnet.OrderBook(tick_size=0.1)
    book.submit_limit(1, "bid", 981, 9, 0.0)
    book.submit_limit(2, "ask", 984, 12, 1.0)
    bid, ask, mid, spread = book.quotes()
    check("two-sided quotes", (bid, ask) == (981, 984))
    check("mid 98.25", abs(mid - 98.25) < 1e-9, f"mid={mid}")
    check("spread 0.3", abs(spread - 0.3) < 1e-9, f"spread={spread}")

    trades, discarded = book.submit_market(3, "bid", 5, 2.0)
    check("market buy trades at best ask", len(trades) == 1 and trades[0][1] == 984)
    check("no discard with liquidity", discarded == 0)

    trades, resting = book.submit_limit(4, "ask", 900, 20, 3.0)
    check("marketable limit crosses", len(trades) == 1 and trades[0][1] == 981)
    check("remainder rests", resting is not None)
    check("cancel returns remainder", book.cancel(resting) == 20 - 9)
    try:
        book.cancel(resting)
        check("second cancel raises", False)
    except LookupError:
        check("second cancel raises", True)

    # Networks.
    lattice = lobnet.Graph.lattice_x(25, 40)
    check("lattice size", lattice.n == 1000 and lattice.edge_count == 4000)
    check("lattice regular", all(lattice.degree(v) == 8 for v in range(1000)))

    ba = lobnet.Graph.barabasi_albert(1000, 4, seed=7)
    check("ba edges", ba.edge_count == 10 + 4 * 995, f"edges={ba.edge_count}")
    check("ba min degree", min(ba.degree(v) for v in range(1000)) == 4)
    hub = max(ba.degree(v) for v in range(1000))
    check("ba grows hubs", hub > 24, f"max degree={hub}")
    check("ba deterministic", ba.edges() == lobnet.Graph.barabasi_albert(1000, 4, seed=7).edges())

    er = lobnet.Graph.erdos_renyi(200, 800, seed=3)
    check("er edge count", er.edge_count == 800)

    # Statistics fixtures.
    acf = lobnet.autocorrelation([1.0, -1.0, 1.0, -1.0], 1)
    check("acf lag0", acf[0] == 1.0)
    check("acf fixture -0.75", abs(acf[1] + 0.75) < 1e-12, f"acf(1)={acf[1]}")
    check(
        "log returns telescope",
        abs(sum(lobnet.log_returns([100.0, 101.0, 99.5])) - (math.log(99.5) - math.log(100.0))) < 1e-12,
    )
    check("two-point kurtosis", abs(lobnet.excess_kurtosis([1.0, -1.0] * 10) + 2.0) < 1e-12)

    # A small simulation with spreading on a scale-free graph.
    config = lobnet.SimConfig(agents=100, horizon=30_000.0, burn_in=3_000.0, seed=5)
    graph = lobnet.Graph.barabasi_albert(100, 4, seed=5)
    result = lobnet.run_simulation(config, graph)
    check("events produced", result.num_events > 1_500, f"{result.num_events} events")
    check("trades produced", result.num_trades > 500, f"{result.num_trades} trades")

    records = result.records()
    times = [r[0] for r in records]
    check("records time-ordered", all(a <= b for a, b in zip(times, times[1:])))
    check("spreading happened", any(r[3].startswith("followup") for r in records))

    rerun = lobnet.run_simulation(config, graph)
    check("determinism", rerun.records() == records and rerun.trades() == result.trades())

    mids = result.midprice_series(delta=10.0)
    check("midprice series", len(mids) == 2701 and all(m > 0 for m in mids), f"{len(mids)} samples")
    returns = lobnet.log_returns(mids)
    acf_abs = lobnet.autocorrelation([abs(r) for r in returns], 20)
    check("abs return acf computable", len(acf_abs) == 21 and acf_abs[0] == 1.0)

    gaps = result.inter_event_times()
    check("inter-event gaps", len(gaps) == sum(1 for t in times if t >= 3_000.0) - 1)
    signs = result.trade_signs()
    check("trade signs", signs and all(s in (1.0, -1.0) for s in signs))
    sizes = result.cascade_sizes()
    check("cascades counted", len(sizes) > 0 and max(sizes) >= 2)

    # Cascade runner: q = 0 never spreads.
    events = lobnet.run_cascade(lobnet.Graph.lattice_x(3, 3), 0, 0.0, 1000.0, seed=2)
    check("q=0 cascade stops at source", len(events) == 1 and events[0][1] == 0)

    with tempfile.TemporaryDirectory() as tmp:
        events_csv = pathlib.Path(tmp) / "events.csv"
        result.write_events_csv(str(events_csv))
        header = events_csv.read_text().splitlines()[0]
        check(
            "events csv schema",
            header == "time,seq,agent,action,side,price,volume,trades,mid_after,cascade_id,cascade_depth",
        )
        edge_csv = pathlib.Path(tmp) / "edges.csv"
        graph.write_edge_list(str(edge_csv))
        check("edge list lines", len(edge_csv.read_text().splitlines()) == graph.edge_count)

    print("smoke test passed")


if __name__ == "__main__":
    main()
