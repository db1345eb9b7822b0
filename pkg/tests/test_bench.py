import numpy as np
import pytest

from ripoint import fit_loglog_slope, ori_op_counts, run_bench, scan_timings


class TestSlopeFit:
    def test_exact_powers(self):
        xs = [2, 4, 8, 16]
        assert fit_loglog_slope(xs, [x**2 for x in xs]) == pytest.approx(2.0)
        assert fit_loglog_slope(xs, xs) == pytest.approx(1.0)

    def test_constant_series(self):
        assert fit_loglog_slope([2, 4, 8], [5, 5, 5]) == pytest.approx(0.0)


class TestOpCounts:
    def test_exact_linear_and_quadratic(self):
        patchwise, pairwise = ori_op_counts([4, 8, 16])
        assert patchwise == [4, 8, 16]
        assert pairwise == [16, 64, 256]

    def test_slopes_exact(self):
        sizes = [4, 8, 16]
        patchwise, pairwise = ori_op_counts(sizes)
        assert fit_loglog_slope(sizes, patchwise) == pytest.approx(1.0)
        assert fit_loglog_slope(sizes, pairwise) == pytest.approx(2.0)


class TestTimings:
    def test_positive_and_sized(self):
        scan, attn = scan_timings([16, 32], dim=16, state_dim=4, repeats=1)
        assert len(scan) == len(attn) == 2
        assert all(s > 0 for s in scan + attn)


class TestRunBench:
    def test_report_fields(self):
        report = run_bench(sizes=(4, 8, 16), scan_sizes=(16, 32), repeats=1)
        assert report.patchwise_slope == pytest.approx(1.0)
        assert report.pairwise_slope == pytest.approx(2.0)
        assert len(report.scan_seconds) == 2

    def test_too_few_sizes(self):
        with pytest.raises(ValueError):
            run_bench(sizes=(4,), scan_sizes=(16, 32))
