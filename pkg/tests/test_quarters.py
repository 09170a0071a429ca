import pytest

from entryscope.quarters import Quarter, quarter_range


def test_parse_format_round_trip():
    for text in ("1999Q1", "2006Q1", "2022Q4"):
        assert str(Quarter.parse(text)) == text


def test_parse_rejects_garbage():
    for bad in ("2006Q5", "2006", "Q1", "20061", "2006q1x"):
        with pytest.raises(ValueError):
            Quarter.parse(bad)


def test_ordering_is_chronological():
    assert Quarter(2005, 4) < Quarter(2006, 1)
    assert Quarter(2006, 1) < Quarter(2006, 2)
    assert max(Quarter(2010, 2), Quarter(2009, 4)) == Quarter(2010, 2)


def test_arithmetic_across_year_boundaries():
    q = Quarter(2006, 1)
    assert q + 4 == Quarter(2007, 1)
    assert q - 1 == Quarter(2005, 4)
    assert q + 7 == Quarter(2007, 4)
    assert (q + 13) - q == 13
    assert Quarter(2008, 4) - Quarter(2006, 1) == 11


def test_offset_round_trip():
    q = Quarter(2012, 3)
    for k in range(-20, 21):
        assert (q + k) - q == k


def test_last_month():
    assert Quarter(2012, 1).last_month == (2012, 3)
    assert Quarter(2012, 4).last_month == (2012, 12)


def test_quarter_range():
    qs = quarter_range(Quarter(2005, 3), Quarter(2006, 2))
    assert [str(q) for q in qs] == ["2005Q3", "2005Q4", "2006Q1", "2006Q2"]
    with pytest.raises(ValueError):
        quarter_range(Quarter(2006, 2), Quarter(2006, 1))


def test_invalid_quarter_index():
    with pytest.raises(ValueError):
        Quarter(2006, 0)
    with pytest.raises(ValueError):
        Quarter(2006, 5)
