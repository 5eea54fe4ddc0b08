"""
Testes de formato de modelo, exportação CSV/JSON, leitura de DoE e validadores
"""
import gzip
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.dataset import read_doe_csv
from core.errors import CsvParseError, InvalidArgumentError, ModelFileError
from core.export import format_float, to_jsonable, write_csv, write_json
from core.protocol import FORMAT_NAME, FORMAT_VERSION, decode_document, encode_document, read_document, write_document
from core.validators import validate_box, validate_design, validate_projection, validate_thresholds


class TestModelDocument:
    """Documento versionado do modelo"""

    def test_plain_and_compressed(self):
        data = {"values": [0.1, 1e-300, -2.5]}
        plain = encode_document(data)
        packed = encode_document(data, compress=True)
        assert packed[:2] == b"\x1f\x8b"
        assert decode_document(plain) == decode_document(packed)
        assert decode_document(plain)["values"] == [0.1, 1e-300, -2.5]

    def test_compressed_bytes_are_stable(self):
        data = {"a": 1}
        assert encode_document(data, compress=True) == encode_document(data, compress=True)

    def test_header_fields(self):
        doc = decode_document(encode_document({"a": 1}))
        assert doc["format"] == FORMAT_NAME and doc["version"] == FORMAT_VERSION

    @pytest.mark.parametrize("raw", [
        b"not json",
        b"\x1f\x8bbroken",
        json.dumps({"format": "other", "version": 1}).encode(),
        json.dumps({"format": FORMAT_NAME, "version": 99}).encode(),
        b"[1, 2]",
    ])
    def test_rejects(self, raw):
        with pytest.raises(ModelFileError):
            decode_document(raw)

    def test_truncated_gzip(self):
        raw = encode_document({"a": list(range(200))}, compress=True)
        with pytest.raises(ModelFileError):
            decode_document(raw[: len(raw) // 2])

    def test_nan_is_not_written(self):
        with pytest.raises(ValueError):
            encode_document({"x": float("nan")})

    def test_file_suffix_selects_compression(self, tmp_path):
        path = write_document(tmp_path / "sub" / "m.json.gz", {"k": [1, 2]})
        assert gzip.decompress(path.read_bytes())
        assert read_document(path)["k"] == [1, 2]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFileError):
            read_document(tmp_path / "none.json")


class TestExport:
    """CSV e JSON"""

    def test_format_float(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(2.0) == "2"
        assert format_float(float("nan")) == "nan"
        assert format_float(float("-inf")) == "-inf"
        assert float(format_float(1 / 3)) == 1 / 3

    def test_write_csv(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["eta", "flag", "n"], [[0.5, True, np.int64(3)]])
        assert path.read_text(encoding="utf-8") == "eta,flag,n\n0.5,1,3\n"

    def test_column_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "t.csv", ["a", "b"], [[1.0]])

    def test_to_jsonable(self):
        doc = to_jsonable({"a": np.array([1.0, np.nan]), 2: np.float64(0.5), "b": (np.bool_(True), np.int32(4))})
        assert doc == {"a": [1.0, None], "2": 0.5, "b": [True, 4]}

    def test_write_json_sorted(self, tmp_path):
        path = write_json(tmp_path / "s.json", {"b": 1, "a": np.inf})
        text = path.read_text(encoding="utf-8")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": None, "b": 1}


def _write(tmp_path, text, name="doe.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestDoeCsv:
    """Leitura de planos de experimentos"""

    def test_unit_inputs_are_kept(self, tmp_path):
        doe = read_doe_csv(_write(tmp_path, "x1,x2,y\n0.1,0.2,1.5\n0.9,0.4,2.5\n0.5,0.7,0.0\n"))
        assert doe.input_names == ["x1", "x2"] and doe.response_name == "y"
        assert not doe.normalized
        assert_allclose(doe.design[0], [0.1, 0.2])
        assert_allclose(doe.values, [1.5, 2.5, 0.0])

    def test_min_max_normalization(self, tmp_path):
        doe = read_doe_csv(_write(tmp_path, "p,q,y\n10,-1,0\n20,1,1\n15,0,2\n"))
        assert doe.normalized
        assert_allclose(doe.design, [[0, 0], [1, 1], [0.5, 0.5]])
        assert_allclose(doe.lower, [10, -1])
        assert_allclose(doe.upper, [20, 1])

    def test_response_column(self, tmp_path):
        doe = read_doe_csv(_write(tmp_path, "y,x1,x2\n1,0.1,0.2\n2,0.3,0.4\n"), "y")
        assert doe.input_names == ["x1", "x2"]
        assert_allclose(doe.values, [1, 2])

    def test_blank_lines_are_skipped(self, tmp_path):
        doe = read_doe_csv(_write(tmp_path, "x,y\n0.1,1\n\n0.2,2\n"))
        assert doe.design.shape == (2, 1)

    @pytest.mark.parametrize("text,line", [
        ("", 1),
        ("x\n0.1\n", 1),
        ("x,x\n0.1,1\n", 1),
        ("x,y\n0.1,1\n0.2,abc\n", 3),
        ("x,y\n0.1,1\n0.2\n", 3),
        ("x,y\n0.1,1\n0.2,nan\n", 3),
        ("x,y\n0.1,1\n", 2),
    ])
    def test_parse_errors(self, tmp_path, text, line):
        with pytest.raises(CsvParseError) as info:
            read_doe_csv(_write(tmp_path, text))
        assert info.value.line == line

    def test_missing_response(self, tmp_path):
        with pytest.raises(CsvParseError):
            read_doe_csv(_write(tmp_path, "x,y\n0.1,1\n0.2,2\n"), "z")

    def test_constant_column(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            read_doe_csv(_write(tmp_path, "x,y\n3,1\n3,2\n"))


class TestValidators:
    """Verificações reutilizáveis"""

    def test_box(self):
        assert validate_box([0, 0], [1, 1]) == (True, None)
        ok, msg = validate_box([0, 2], [1, 1])
        assert not ok and "Coordenada 2" in msg
        assert not validate_box([0], [1, 1])[0]

    def test_design(self):
        assert validate_design([[0.1, 0.2], [0.3, 0.4]], [1.0, 2.0])[0]
        assert not validate_design([[0.1, 0.2], [0.1, 0.2]])[0]
        assert not validate_design([[0.1, 1.5]])[0]
        assert validate_design([[0.1, 1.5]], unit_box=False)[0]
        assert not validate_design([[0.1, 0.2]], [np.nan])[0]
        assert not validate_design([[0.1, 0.2]], [1.0, 2.0])[0]

    def test_projection(self):
        assert validate_projection(np.eye(3)[:, :2], 3)[0]
        assert not validate_projection(np.eye(2), 2)[0]
        assert not validate_projection(np.ones((3, 3)), 3)[0]

    def test_thresholds_warn_but_pass(self):
        assert validate_thresholds([0.5], 0.0, 1.0) == (True, None)
        ok, msg = validate_thresholds([3.0], 0.0, 1.0)
        assert ok and "fora da faixa" in msg
