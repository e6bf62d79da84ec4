import math

import numpy as np
import pytest

from gifsdim import r3
from gifsdim.graph import full_shift, DirectedMultigraph
from gifsdim.model import (
    AffineMap,
    AffineSystem,
    Box,
    PerturbedFamily,
    SpecSyntaxError,
    SpecValidationError,
    family_at,
    quasiregularity_report,
    validate,
)
from gifsdim.specfile import dump_spec, load_spec, parse_spec

SIMILITUDES = """\
gifs 1 dim=2 order=0
vertex v J=0,0|1,1 O=-1,-1|2,2
edge a v v
edge b v v
edge c v v
map a k=0 M=0.5,0,0,0.5 a=0,0
map b k=0 M=0.5,0,0,0.5 a=0.5,0
map c k=0 M=0.5,0,0,0.5 a=0,0.5
"""


def interval_system(maps):
    g = full_shift(len(maps))
    unit = Box([0.0], [1.0])
    T = {e: AffineMap([[c]], [a]) for e, (c, a) in zip(g.edges, maps)}
    return AffineSystem(1, g, T, {"v": unit}, {"v": Box([-0.5], [1.5])})


def test_load_similitudes():
    sys = parse_spec(SIMILITUDES)
    assert isinstance(sys, AffineSystem)
    assert sys.ratio == pytest.approx(0.5)
    assert len(sys.graph.edges) == 3


def test_non_contraction_rejected():
    text = SIMILITUDES.replace("map c k=0 M=0.5,0,0,0.5", "map c k=0 M=1.2,0,0,0.5")
    with pytest.raises(SpecValidationError, match="not a contraction") as info:
        parse_spec(text)
    assert info.value.edge == "c"
    assert info.value.line == 8


def test_singular_map_rejected():
    text = SIMILITUDES.replace("map c k=0 M=0.5,0,0,0.5", "map c k=0 M=0.5,0,0,0")
    with pytest.raises(SpecValidationError, match="non-invertible"):
        parse_spec(text)


def test_malformed_number_has_line_and_field():
    text = SIMILITUDES.replace("a=0.5,0", "a=0.5,zero")
    with pytest.raises(SpecSyntaxError) as info:
        parse_spec(text)
    assert info.value.line == 7
    assert info.value.field == "a"
    assert "line 7" in str(info.value)


@pytest.mark.parametrize(
    "bad, line",
    [
        ("gifs 2 dim=2 order=0", 1),
        ("gifs 1 order=0", 1),
    ],
)
def test_bad_header(bad, line):
    text = SIMILITUDES.replace("gifs 1 dim=2 order=0", bad)
    with pytest.raises(SpecSyntaxError) as info:
        parse_spec(text)
    assert info.value.line == line


def test_unknown_line_and_missing_map():
    with pytest.raises(SpecSyntaxError, match="unknown line type"):
        parse_spec(SIMILITUDES + "bogus x\n")
    with pytest.raises(SpecValidationError, match="missing map"):
        parse_spec(SIMILITUDES + "edge d v v\n")
    with pytest.raises(SpecSyntaxError, match="unknown edge"):
        parse_spec(SIMILITUDES + "map z k=0 M=0.5,0,0,0.5 a=0,0\n")


def test_r3_spec_is_order_one_family(spec):
    fam = spec("r3_family")
    assert isinstance(fam, PerturbedFamily)
    assert fam.order == 1
    assert fam.base.dim == 3


@pytest.mark.parametrize(
    "name",
    ["sierpinski", "sierpinski_gap", "cantor", "diag_pair", "two_vertex", "countable",
     "conformal_family", "translation_family", "stretch_family", "r3_family"],
)
def test_round_trip(spec, name, tmp_path):
    obj = spec(name)
    text = dump_spec(obj)
    again = parse_spec(text, name)
    assert dump_spec(again) == text
    path = tmp_path / f"{name}.gifs"
    dump_spec(obj, path)
    assert dump_spec(load_spec(path)) == text


def test_validate_cantor_thirds():
    rep = validate(interval_system([(1 / 3, 0.0), (1 / 3, 2 / 3)]))
    assert rep.hard_ok
    assert rep.min_separation == pytest.approx(1 / 3)
    assert rep.ssc and rep.osc


def test_validate_touching_halves():
    rep = validate(interval_system([(0.5, 0.0), (0.5, 0.5)]))
    assert rep.hard_ok
    assert rep.min_separation == 0.0
    assert not rep.ssc
    assert rep.osc
    assert rep.ssc_offenders == [("e0", "e1")]


def test_validate_two_vertex_overlap():
    g = DirectedMultigraph.from_edges([("a", "u", "w"), ("b", "u", "w"), ("c", "w", "u")])
    J = {"u": Box([0.0], [1.0]), "w": Box([2.0], [3.0])}
    O = {"u": Box([-0.1], [1.1]), "w": Box([1.9], [3.1])}
    maps = {
        "a": AffineMap([[0.5]], [-1.0]),  # [2,3] -> [0,0.5]
        "b": AffineMap([[0.5]], [-0.8]),  # [2,3] -> [0.2,0.7]
        "c": AffineMap([[0.5]], [2.0]),
    }
    rep = validate(AffineSystem(1, g, maps, J, O))
    assert rep.hard_ok
    assert not rep.ssc and not rep.osc
    assert ("a", "b") in rep.ssc_offenders


def test_validate_reports_image_escape():
    rep = validate(interval_system([(0.5, 0.0), (0.5, 0.7)]))
    assert not rep.hard_ok
    assert any("leaves" in f for f in rep.failures)


def test_deeper_separation_is_not_smaller():
    sys = interval_system([(0.4, 0.0), (0.4, 0.6)])
    assert validate(sys, 2).min_separation >= validate(sys, 1).min_separation - 1e-12
    # x/2 and x/4+1/2 touch at 1/2, but the depth-2 images pull apart
    sys = AffineSystem(
        1, full_shift(2), {"e0": AffineMap([[0.5]], [0.0]), "e1": AffineMap([[0.25]], [0.5])},
        {"v": Box([0.0], [1.0])}, {"v": Box([-0.5], [1.5])},
    )
    assert validate(sys, 1).min_separation == 0.0
    assert validate(sys, 2).min_separation > 0.0


def test_bundled_examples_valid(spec):
    for name in ["sierpinski", "sierpinski_gap", "cantor", "diag_pair", "two_vertex", "countable"]:
        assert validate(spec(name)).hard_ok, name
    assert validate(spec("sierpinski_gap")).ssc
    assert not validate(spec("sierpinski")).ssc


def test_family_at_zero_is_base():
    fam = r3.r3_family()
    assert family_at(fam, 0.0) is fam.base


def test_family_at_r3_entries():
    fam = r3.r3_family(0.4)
    M = family_at(fam, 0.1).maps["e0"].linear
    expected = 0.4 * np.array(
        [[0.5 + 0.1 / 4, 0, 0], [0, 0.25 + 0.05, -math.sqrt(3) / 4], [0, math.sqrt(3) / 4, 0.25 + 0.05]]
    )
    np.testing.assert_allclose(M, expected, rtol=0, atol=1e-15)


def test_family_out_of_range(spec):
    fam = spec("stretch_family")  # diag(1/2 + eps, 1/2) stops contracting at eps = 1/2
    assert fam.eps_max < 0.5
    with pytest.raises(SpecValidationError, match="validity range"):
        family_at(fam, 0.6)
    with pytest.raises(ValueError):
        family_at(fam, -0.1)


def test_validity_prefix(spec):
    fam = spec("stretch_family")
    assert fam.validity_prefix([0.1, 0.3, 0.6, 0.2]) == [0.1, 0.3]


def test_quasiregularity_conformal(spec):
    rep = quasiregularity_report(spec("conformal_family"), [0.1, 0.05, 0.025])
    assert rep.exactly_conformal
    assert math.isnan(rep.slope)
    assert rep.satisfies_order(5)


def test_quasiregularity_r3_quadratic():
    grid = [0.1 * 2.0**-j for j in range(8)]
    rep = quasiregularity_report(r3.r3_family(), grid)
    assert rep.slope == pytest.approx(2.0, abs=0.05)
    assert rep.satisfies_order(1)


def test_quasiregularity_stretch_linear(spec):
    rep = quasiregularity_report(spec("stretch_family"), [0.1 * 2.0**-j for j in range(8)])
    assert rep.slope == pytest.approx(1.0, abs=0.05)
    assert not rep.satisfies_order(1)


def test_affine_map_helpers():
    T = AffineMap([[0.5, 0.0], [0.0, 0.25]], [1.0, 2.0])
    np.testing.assert_allclose(T.fixed_point(), [2.0, 8 / 3])
    S = T.compose(T)
    np.testing.assert_allclose(S([1.0, 1.0]), T(T([1.0, 1.0])))
    img = T.image_box(Box([0.0, 0.0], [1.0, 1.0]))
    np.testing.assert_allclose(img.low, [1.0, 2.0])
    np.testing.assert_allclose(img.high, [1.5, 2.25])
