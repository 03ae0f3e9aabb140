"""Two-panel trial figure: queue lengths on the left, per-agent opinion
trajectories on the right, colored by each agent's final location."""

import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "oq-reports"  # stable ids -> diffable SVGs

import matplotlib.pyplot as plt

from .trace_io import read_trace

# palette keyed by final location code, fixed for reproducible diffs
FINAL_LOCATION_COLORS = {
    1: "#1f77b4",    # ended in queue A
    -1: "#d62728",   # ended in queue B
    0: "#7f7f7f",    # still waiting
    9: "#9467bd",    # served and departed
}
QUEUE_A_COLOR = FINAL_LOCATION_COLORS[1]
QUEUE_B_COLOR = FINAL_LOCATION_COLORS[-1]


def _output_base(out_path):
    root, ext = os.path.splitext(str(out_path))
    return root if ext.lower() in (".png", ".svg") else str(out_path)


def plot_trial(trace_path, out_path):
    """Render one trace to <out>.png and <out>.svg; returns the two paths.

    The trace is validated before any file is written, so a malformed
    CSV produces an error and no output.
    """
    frame = read_trace(trace_path)
    base = _output_base(out_path)

    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))

    left.plot(frame.t, frame.n_a, color=QUEUE_A_COLOR, label="queue A", lw=1.6)
    left.plot(frame.t, frame.n_b, color=QUEUE_B_COLOR, label="queue B", lw=1.6)
    left.set_xlabel("time")
    left.set_ylabel("queue length")
    left.set_ylim(-0.5, frame.n + 0.5)
    left.legend(loc="best", frameon=False)
    left.set_title("queue lengths")

    final = frame.locations[-1]
    for agent in range(frame.n):
        right.plot(
            frame.t,
            frame.opinions[:, agent],
            color=FINAL_LOCATION_COLORS[int(final[agent])],
            lw=0.9,
            alpha=0.85,
        )
    right.axhline(0.0, color="0.8", lw=0.6, zorder=0)
    right.set_xlabel("time")
    right.set_ylabel("opinion")
    right.set_ylim(-1.05, 1.05)
    right.set_title("per-agent opinions (colored by final queue)")

    fig.tight_layout()
    png_path, svg_path = base + ".png", base + ".svg"
    fig.savefig(png_path, dpi=150)
    fig.savefig(svg_path, metadata={"Date": None})  # no timestamp: byte-stable
    plt.close(fig)
    return png_path, svg_path
