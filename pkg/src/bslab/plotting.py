"""Optional PNG figures for experiment tables.

matplotlib is imported lazily so the library and the CSV path work
without it; install the ``plots`` extra to enable ``--figures``.
"""
from __future__ import annotations

from .errors import InputError


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise InputError("--figures needs matplotlib; install the 'plots' extra") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _col(outcome, name):
    i = outcome.header.index(name)
    return [row[i] for row in outcome.rows]


def _finish(fig, ax, path, title):
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def render(name, outcome, path):
    """Draw the figure for experiment ``name`` into ``path``; returns False if none applies."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if name == "mu-curve":
            k = _col(outcome, "k")
            ax.semilogx(k, _col(outcome, "mu"), "o-", label="mu(k)")
            ax.semilogx(k, _col(outcome, "one_minus_ak"), "--", label="1 - a k")
            ax.set_xlabel("k")
            _finish(fig, ax, path, "Dominant eigenvalue near threshold")
        elif name == "wk-decomp":
            k = _col(outcome, "k")
            ax.loglog(k, _col(outcome, "norm_w"), "o-", label="||W(k)||")
            ax.loglog(k, _col(outcome, "norm_z"), "s-", label="||Z(k)||")
            ax.set_xlabel("k")
            _finish(fig, ax, path, "Pole and regular parts")
        elif name == "lemma3":
            z = _col(outcome, "z")
            ax.semilogx(z, _col(outcome, "J"), "o-", label="J(z)")
            ax.semilogx(z, _col(outcome, "lower_bound"), "--", label="lower bound")
            ax.invert_xaxis()
            ax.set_xlabel("z")
            _finish(fig, ax, path, "Logarithmic divergence")
        elif name == "green-bound":
            xi = _col(outcome, "xi")
            ax.loglog(xi, _col(outcome, "G0"), "-", label="G0(xi, 1)")
            ax.loglog(xi, _col(outcome, "bound"), "--", label="bound")
            ax.set_xlabel("|xi|")
            _finish(fig, ax, path, "Six-dimensional resolvent kernel")
        elif name == "zabyv":
            ax.plot(range(len(outcome.rows)), _col(outcome, "min_ratio"), "o", label="min ratio")
            ax.axhline(1.0, color="k", lw=0.8)
            ax.set_xlabel("(R0, delta) cell")
            _finish(fig, ax, path, "Two-point inequality")
        elif name == "threebody-scan":
            ax.plot(_col(outcome, "theta"), _col(outcome, "energy"), "o-", label="E_gr")
            ax.axhline(0.0, color="k", lw=0.8)
            ax.set_xlabel("Theta")
            _finish(fig, ax, path, "Ground-state energy along Theta")
        elif name == "spreading":
            theta = _col(outcome, "theta")
            for col in outcome.header:
                if col.startswith("I_R="):
                    ax.plot(theta, _col(outcome, col), "o-", label=col)
            ax.set_xlabel("Theta")
            _finish(fig, ax, path, "Probability inside the ball")
        else:
            return False
    finally:
        plt.close(fig)
    return True
