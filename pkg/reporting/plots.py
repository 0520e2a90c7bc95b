"""Accuracy-curve charts of single runs."""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from protocols.records import CURVE_D1, CURVE_D2, CURVE_ORDER, CURVE_UNION, RunRecord  # noqa: E402
from utils.errors import RecordError  # noqa: E402
from utils.logging_config import logger  # noqa: E402

CURVE_STYLES = {
    CURVE_D1: ("tab:blue", "χ(D1, D1, t)"),
    CURVE_D2: ("tab:green", "χ(D2, D2, t)"),
    CURVE_UNION: ("tab:red", "χ(D2, D1∪D2, t)"),
}

# text stays <text>, element ids stable between runs
SVG_STYLE = {"svg.fonttype": "none", "svg.hashsalt": "forgetting-bench"}


def plot_record(record: RunRecord, output_path) -> Path:
    """
    Draw the curves of one run as an SVG chart.

    Retraining (iterations past t_max) is shaded grey; only curves present
    in the record get a legend entry.

    Raises:
        RecordError: If the record holds no non-empty curve
    """
    curves = [(name, record.curves[name]) for name in CURVE_ORDER if len(record.curves.get(name, ())) > 0]
    if not curves:
        raise RecordError(f"Run {record.run_id} has no curves to plot")
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    t_max = record.t_max
    with plt.rc_context(SVG_STYLE):
        fig, ax = plt.subplots(figsize=(7, 4))
        try:
            ax.axvspan(t_max, 2 * t_max, color="0.88", zorder=0, linewidth=0)
            for name, curve in curves:
                color, label = CURVE_STYLES[name]
                ax.plot(curve.iterations, curve.accuracies, color=color, label=label, linewidth=1.5, clip_on=False)
            ax.set_xlim(0, 2 * t_max)
            ax.set_ylim(0, 1)
            ax.set_xlabel("iteration")
            ax.set_ylabel("test accuracy")
            ax.set_title(f"{record.model_family} on {record.task} ({record.paradigm.value}, {record.stage.value})")
            ax.legend(loc="lower left")
            fig.tight_layout()
            fig.savefig(output_path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.info(f"Wrote plot {output_path}")
    return output_path
