"""Optional figures for CLI runs (written to files, never shown)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_channels(report, path):
    """Bar chart of the per-channel heat currents."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    labels = [f"{c.bath} q={c.q}" for c in report.per_channel]
    ax.bar(range(len(labels)), [c.current for c in report.per_channel], color="tab:blue")
    ax.set_xticks(range(len(labels)), labels, rotation=60, fontsize=7)
    ax.axhline(0, color="k", lw=0.6)
    unit = f" [{report.units}]" if report.units else ""
    ax.set_ylabel("heat current" + unit)
    return _save(fig, path)


def plot_trajectory(times, populations, sigma, path):
    fig, (a, b) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    for k in range(populations.shape[1]):
        a.plot(times, populations[:, k], label=f"p{k}")
    a.set_ylabel("population")
    a.legend(fontsize=7)
    b.plot(times, sigma, color="tab:red")
    b.set_ylabel("entropy production")
    b.set_xlabel("t")
    return _save(fig, path)


def plot_sweep(parameter, values, currents, power, path):
    """``currents`` maps bath label to a list aligned with ``values``."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, js in currents.items():
        ax.plot(values, js, marker="o", label=f"J {label}")
    ax.plot(values, power, marker="s", color="k", label="power")
    ax.axhline(0, color="k", lw=0.6)
    ax.set_xlabel(parameter)
    ax.legend(fontsize=7)
    return _save(fig, path)
