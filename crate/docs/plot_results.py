"""Plot nodethin outputs with matplotlib.

    python docs/plot_results.py nodes domain.csv [coarse.csv]
    python docs/plot_results.py residuals run/residuals.csv
    python docs/plot_results.py clr metrics.json
    python docs/plot_results.py bench bench.csv
"""
import csv
import json
import sys

import matplotlib.pyplot as plt


def read_csv(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def nodes(paths):
    for p in paths:
        rows = read_csv(p)
        plt.scatter([float(r["x"]) for r in rows], [float(r["y"]) for r in rows], s=1, label=p)
    plt.gca().set_aspect("equal")
    plt.legend()


def residuals(path):
    rows = read_csv(path)
    plt.semilogy([int(r["iteration"]) for r in rows], [float(r["relres"]) for r in rows], "o-")
    plt.xlabel("V-cycle")
    plt.ylabel("relative residual")


def clr(path):
    recs = json.load(open(path))
    ks = [r["k"] for r in recs]
    plt.plot(ks, [r["clr_avg"] for r in recs], "o-", label="CLR avg")
    plt.plot(ks, [r["clr_sd"] for r in recs], "s-", label="CLR sd")
    plt.xlabel("k")
    plt.legend()


def bench(path):
    rows = read_csv(path)
    for m in sorted({r["method"] for r in rows}):
        sel = [r for r in rows if r["method"] == m]
        plt.loglog([int(r["n_out"]) for r in sel], [float(r["seconds"]) for r in sel], "o-", label=m)
    plt.xlabel("output nodes")
    plt.ylabel("seconds (median)")
    plt.legend()


if __name__ == "__main__":
    kind, args = sys.argv[1], sys.argv[2:]
    {"nodes": lambda: nodes(args), "residuals": lambda: residuals(args[0]),
     "clr": lambda: clr(args[0]), "bench": lambda: bench(args[0])}[kind]()
    plt.show()
