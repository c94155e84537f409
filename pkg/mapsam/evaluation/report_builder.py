"""
Report Builder Module
Builds and formats evaluation, ablation and tap-sweep tables
"""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .evaluator import EvaluationReport


class ReportBuilder:
    """Builds plain-text result tables"""

    @staticmethod
    def format_report_header(title: str, details: Optional[Dict[str, str]] = None) -> str:
        """
        Format a report header

        Args:
            title: First line of the report
            details: Optional key/value lines (dataset, checkpoint, seed ...)

        Returns:
            Header string ending in a separator line
        """
        lines = [title]
        for key, value in (details or {}).items():
            lines.append(f"{key}: {value}")
        lines.append("=" * 50)
        return "\n".join(lines) + "\n"

    @staticmethod
    def build_evaluation_table(report: EvaluationReport, dataset: str, regime: str, per_tile: bool = True) -> str:
        """
        Summary line (F1, IoU per dataset/regime), then one row per tile

        Args:
            report: Micro-aggregated evaluation
            dataset: Feature class label
            regime: Training regime label (full, 10-shot ...)
            per_tile: Append the per-tile rows with their raw counts

        Returns:
            Table text
        """
        lines = [
            f"{'dataset':<10} {'regime':<14} {'head':<7} {'F1':>8} {'IoU':>8}",
            f"{dataset:<10} {regime:<14} {report.head:<7} {report.f1 * 100:8.2f} {report.iou * 100:8.2f}",
        ]
        if per_tile:
            lines.append("")
            lines.append(f"{'tile':<18} {'tp':>6} {'fp':>6} {'fn':>6} {'tn':>6} {'F1':>8} {'IoU':>8}")
            for row in report.rows:
                c = row.counts
                lines.append(
                    f"{row.tile_id:<18} {c.tp:>6} {c.fp:>6} {c.fn:>6} {c.tn:>6} {row.f1 * 100:8.2f} {row.iou * 100:8.2f}"
                )
        return "\n".join(lines) + "\n"

    @staticmethod
    def mean_sd(values: Sequence[float]) -> Tuple[float, float]:
        arr = np.asarray(values, dtype=np.float64) * 100.0
        sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), sd

    @staticmethod
    def build_ablation_table(rows: Sequence[Tuple[str, Sequence[float]]]) -> str:
        """
        One row per variant, mean±sd IoU over seeds, gain over the previous row

        The first (baseline) row's gain is "-".
        """
        lines = [f"{'variant':<26} {'IoU (mean±sd)':>16} {'Gain':>8}"]
        previous = None
        for name, values in rows:
            mean, sd = ReportBuilder.mean_sd(values)
            gain = "-" if previous is None else f"{mean - previous:+.2f}"
            lines.append(f"{name:<26} {f'{mean:.2f}±{sd:.2f}':>16} {gain:>8}")
            previous = mean
        return "\n".join(lines) + "\n"

    @staticmethod
    def build_tap_sweep_table(rows: Sequence[Tuple[Sequence[int], Sequence[float], Sequence[float]]]) -> str:
        """One row per tap set, coarse-mask IoU and final IoU (mean±sd over seeds)"""
        lines = [f"{'taps':<12} {'layers':>6} {'coarse IoU':>16} {'final IoU':>16}"]
        for taps, coarse, final in rows:
            c_mean, c_sd = ReportBuilder.mean_sd(coarse)
            f_mean, f_sd = ReportBuilder.mean_sd(final)
            label = "{" + ",".join(str(t) for t in taps) + "}"
            lines.append(
                f"{label:<12} {len(taps):>6} {f'{c_mean:.2f}±{c_sd:.2f}':>16} {f'{f_mean:.2f}±{f_sd:.2f}':>16}"
            )
        return "\n".join(lines) + "\n"

