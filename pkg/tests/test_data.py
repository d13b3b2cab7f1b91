import numpy as np
import pytest

from nzddopt.build import compress
from nzddopt.core import FormatError, SubsetFamily
from nzddopt.data import (
    Sample, format_libsvm, gen_mip, gen_rofk, nu_grid, parse_libsvm, parse_libsvm_text, rofk_label,
)
from nzddopt.extform import encode_rows, extend_binary
from nzddopt.system import format_system


class TestLibsvm:
    def test_examples(self):
        s = parse_libsvm_text("+1 1:1 3:1\n")
        assert s.X.tolist() == [[1, 0, 1]] and s.y.tolist() == [1]
        s = parse_libsvm_text("-1 2:0.4\n")
        assert s.X.tolist() == [[0, 0]] and s.y.tolist() == [-1]

    def test_fixture(self, fixtures_dir):
        s = parse_libsvm(fixtures_dir / "tiny.svm")
        assert s.X.tolist() == [[1, 0, 1], [0, 0, 0], [0, 1, 1], [1, 0, 0]]
        assert s.y.tolist() == [1, -1, 1, -1]

    def test_threshold(self):
        assert parse_libsvm_text("1 1:0.4\n", threshold=0.3).X.tolist() == [[1]]

    def test_binary_round_trip(self):
        text = "+1 1:1 4:1\n-1 2:1\n+1 3:1 4:1\n"
        s = parse_libsvm_text(text)
        assert format_libsvm(s) == text
        assert parse_libsvm_text(format_libsvm(s), threshold=0.9) == s

    @pytest.mark.parametrize("text,line", [("+1 1:1\n-1 2\n", 2), ("x 1:1\n", 1), ("+1 0:1\n", 1)])
    def test_malformed(self, text, line):
        with pytest.raises(FormatError) as info:
            parse_libsvm_text(text)
        assert info.value.line == line

    def test_sample_validation(self):
        with pytest.raises(ValueError):
            Sample([[2]], [1])
        with pytest.raises(ValueError):
            Sample([[1]], [0])


class TestGenerators:
    def test_mip_shape(self):
        s = gen_mip(m=10, seed=3)
        assert s.num_rows == 10 and all(len(r.terms) == 10 and r.rhs == 1 for r in s.rows)
        assert [v.kind for v in s.variables] == ["binary"] * 12 + ["real"] * 13
        assert all(1 <= c <= 100 for _, c in s.objective)

    def test_mip_deterministic(self):
        assert format_system(gen_mip(m=50, seed=9)) == format_system(gen_mip(m=50, seed=9))
        assert format_system(gen_mip(m=50, seed=9)) != format_system(gen_mip(m=50, seed=10))

    def test_mip_duplicates(self):
        s = gen_mip(n=6, k=3, l=2, m=200, seed=1)
        fam, dups = encode_rows(s)
        assert len(fam) <= 20 and dups == 200 - len(fam)

    def test_mip_extended_rows(self):
        s = gen_mip(m=10**4, seed=0)
        ext = extend_binary(s)
        assert ext.base.num_rows <= s.num_rows

    def test_rofk_labels(self):
        X = np.zeros((2, 20), dtype=np.uint8)
        X[0, :5] = 1
        X[1, :4] = 1
        assert rofk_label(X, 10, 5).tolist() == [1, -1]

    def test_rofk_distinct_and_deterministic(self):
        a, b = gen_rofk(m=500, seed=4), gen_rofk(m=500, seed=4)
        assert a == b and format_libsvm(a) == format_libsvm(b)
        assert len({x.tobytes() for x in a.X}) == 500
        np.testing.assert_array_equal(a.y, rofk_label(a.X, 10, 5))

    def test_rofk_large_space(self):
        s = gen_rofk(n=30, k=10, r=5, m=300, seed=0)
        assert len({x.tobytes() for x in s.X}) == 300

    def test_rofk_errors(self):
        with pytest.raises(ValueError):
            gen_rofk(n=3, k=3, r=1, m=9)
        with pytest.raises(ValueError):
            gen_rofk(r=11)

    def test_rofk_compression_ratio_falls(self):
        ratios = []
        for m in (1000, 8000):
            s = gen_rofk(m=m, seed=0)
            fam = SubsetFamily([tuple(np.flatnonzero(x)) + (20,) for x in s.X], 21)
            g, _ = compress(fam)
            assert g.num_edges <= len(fam)
            ratios.append(g.num_edges / fam.total_size())
        assert ratios[1] < ratios[0]

    def test_nu_grid(self):
        assert nu_grid() == [0.1, 0.2, 0.3, 0.4, 0.5]
