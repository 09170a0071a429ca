import pytest
from numpy.testing import assert_allclose

from entryscope.ingest import (
    CpiSeries,
    DeflationError,
    FareDistribution,
    IngestError,
    aggregate_db1b,
    build_route_quarters,
    deflate,
    merge_itineraries,
    merge_supply_demand,
    parse_coupon,
    parse_ticket,
    read_cpi_csv,
    read_route_quarters_csv,
    temp_differential,
    weighted_percentile,
    write_route_quarters_csv,
)
from entryscope.ingest.records import Db1bAggregate, MergedItinerary, T100Aggregate
from entryscope.quarters import Quarter
from entryscope.synthgen import write_scenario_fixtures
from entryscope.synthgen.files import SCENARIO_BASE_QUARTER

Q = Quarter(2012, 1)


def coupon_csv(tmp_path, rows):
    header = (
        "ITIN_ID,SEQ_NUM,ORIGIN,DEST,OP_CARRIER,TK_CARRIER,FARE_CLASS,"
        "PASSENGERS,DISTANCE,ORIGIN_STATE,DEST_STATE,YEAR,QUARTER"
    )
    path = tmp_path / "coupon.csv"
    path.write_text("\n".join([header] + rows) + "\n")
    return path


def test_parse_coupon_keeps_valid_round_trip(tmp_path):
    path = coupon_csv(
        tmp_path,
        [
            "I1,1,IAD,LAX,UA,UA,COACH,1,2288,VA,CA,2012,1",
            "I1,2,LAX,IAD,UA,UA,COACH,1,2288,CA,VA,2012,1",
        ],
    )
    itins, report = parse_coupon(path)
    assert len(itins) == 1
    itin = itins[0]
    assert itin.segments == (("IAD", "LAX"), ("LAX", "IAD"))
    assert itin.operating_carrier == "UA"
    assert itin.quarter == Q
    assert report.dropped("coupon_nonstop_roundtrip") == 0


def test_parse_coupon_drops_three_segment_itinerary(tmp_path):
    path = coupon_csv(
        tmp_path,
        [
            "I1,1,IAD,ORD,UA,UA,COACH,1,600,VA,IL,2012,1",
            "I1,2,ORD,LAX,UA,UA,COACH,1,1700,IL,CA,2012,1",
            "I1,3,LAX,IAD,UA,UA,COACH,1,2288,CA,VA,2012,1",
        ],
    )
    itins, report = parse_coupon(path)
    assert itins == []
    assert report.dropped("coupon_nonstop_roundtrip") == 1


def test_parse_coupon_drops_codeshare(tmp_path):
    path = coupon_csv(
        tmp_path,
        [
            "I1,1,IAD,LAX,UA,AA,COACH,1,2288,VA,CA,2012,1",
            "I1,2,LAX,IAD,UA,AA,COACH,1,2288,CA,VA,2012,1",
        ],
    )
    itins, report = parse_coupon(path)
    assert itins == []
    assert report.dropped("coupon_codeshare") == 1


def test_parse_coupon_missing_header_is_fatal(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("A,B\n1,2\n")
    with pytest.raises(IngestError, match="missing required columns"):
        parse_coupon(path)


def test_parse_coupon_counts_malformed_rows(tmp_path):
    path = coupon_csv(
        tmp_path,
        [
            "I1,1,IAD,LAX,UA,UA,COACH,one,2288,VA,CA,2012,1",
            "I2,1,IAD,LAX,UA,UA,COACH,1,2288,VA,CA,2012,1",
            "I2,2,LAX,IAD,UA,UA,COACH,1,2288,CA,VA,2012,1",
        ],
    )
    itins, report = parse_coupon(path)
    assert [i.itinerary_id for i in itins] == ["I2"]
    assert report.dropped("coupon_malformed_rows") == 1
    assert any(":2:" in e for e in report.errors)  # line number included


def ticket_csv(tmp_path, rows):
    header = "ITIN_ID,ITIN_FARE,BULK_FARE_UNRELIABLE,DISTANCE_FULL,YEAR,QUARTER"
    path = tmp_path / "ticket.csv"
    path.write_text("\n".join([header] + rows) + "\n")
    return path


def test_parse_ticket_fare_per_mile(tmp_path):
    path = ticket_csv(
        tmp_path,
        [
            "T1,500,0,1776,2012,1",     # retained: 500 < 1776
            "T2,2000,0,1776,2012,1",    # dropped: above $1/mile
            "T3,1776,0,1776,2012,1",    # boundary: exactly $1/mile stays
            "T4,300,1,1776,2012,1",     # unreliable bulk fare
            "T5,-4,0,1776,2012,1",      # row error
        ],
    )
    tickets, report = parse_ticket(path)
    assert [t.itinerary_id for t in tickets] == ["T1", "T3"]
    assert report.dropped("ticket_fare_per_mile") == 1
    assert report.dropped("ticket_bulk_unreliable") == 1
    assert report.dropped("ticket_malformed_rows") == 1


def _merged(itin_id, carrier="UA", origin="IAD", dest="LAX", fare=300.0, pax=10,
            fare_class="coach", quarter=Q, distance=900.0):
    return MergedItinerary(
        itinerary_id=itin_id, carrier=carrier, origin=origin, dest=dest,
        fare_class=fare_class, passengers=pax, nominal_fare=fare,
        one_way_distance=distance, origin_state="VA", dest_state="CA",
        quarter=quarter,
    )


def test_merge_itineraries_inner_join(tmp_path):
    coupons, _ = parse_coupon(
        coupon_csv(
            tmp_path,
            [
                "A,1,IAD,LAX,UA,UA,COACH,2,900,VA,CA,2012,1",
                "A,2,LAX,IAD,UA,UA,COACH,2,900,CA,VA,2012,1",
                "B,1,IAD,DEN,UA,UA,COACH,1,900,VA,CO,2012,1",
                "B,2,DEN,IAD,UA,UA,COACH,1,900,CO,VA,2012,1",
                "D,1,IAD,ORD,UA,UA,COACH,1,600,VA,IL,2012,1",
                "D,2,ORD,IAD,UA,UA,COACH,1,600,IL,VA,2012,1",
            ],
        )
    )
    tickets, _ = parse_ticket(
        ticket_csv(
            tmp_path,
            [
                "A,420,0,1800,2012,1",
                "C,100,0,1800,2012,1",
                "B,95,0,1750,2012,1",  # distance disagrees with 2 x 900
            ],
        )
    )
    merged, report = merge_itineraries(coupons, tickets)
    assert [m.itinerary_id for m in merged] == ["A"]
    assert merged[0].nominal_fare == 420.0
    assert report.dropped("merge_coupon_only") == 1
    assert report.dropped("merge_ticket_only") == 1
    assert report.dropped("merge_field_mismatch") == 1


def test_merge_duplicate_id_is_dropped(tmp_path):
    coupons, _ = parse_coupon(
        coupon_csv(
            tmp_path,
            [
                "X,1,IAD,LAX,UA,UA,COACH,1,900,VA,CA,2012,1",
                "X,2,LAX,IAD,UA,UA,COACH,1,900,CA,VA,2012,1",
            ],
        )
    )
    tickets, _ = parse_ticket(
        ticket_csv(tmp_path, ["X,420,0,1800,2012,1", "X,430,0,1800,2012,1"])
    )
    merged, report = merge_itineraries(coupons, tickets)
    assert merged == []
    assert report.dropped("merge_duplicate_id") == 1
    assert any("duplicate id" in e for e in report.errors)


def test_weighted_percentile_nearest_rank():
    values = [10.0, 20.0, 30.0, 40.0]
    weights = [1, 1, 1, 1]
    assert weighted_percentile(values, weights, 25.0) == 10.0
    assert weighted_percentile(values, weights, 50.0) == 20.0
    assert weighted_percentile(values, weights, 75.0) == 30.0
    assert weighted_percentile(values, weights, 99.0) == 40.0
    # passenger expansion: the heavy value dominates the high ranks
    assert weighted_percentile([100.0, 200.0], [99, 1], 99.0) == 100.0
    assert weighted_percentile([100.0, 200.0], [98, 2], 99.0) == 200.0


def test_aggregate_fare_floor_boundary():
    base = [_merged(f"K{i}", fare=150.0, pax=60) for i in range(2)]
    floor = [_merged("F19", fare=19.0, pax=1), _merged("F20", fare=20.0, pax=1)]
    extra_routes = [
        _merged(f"R{i}", dest=f"X{i:02d}", fare=150.0, pax=120) for i in range(9)
    ]
    aggs, report = aggregate_db1b(base + floor + extra_routes, Q)
    assert report.dropped("db1b_fare_floor") == 1
    main = next(a for a in aggs if a.route == ("IAD", "LAX"))
    assert main.passengers == 121  # 2 x 60 plus the kept $20 ticket
    assert main.fares.p10 == 20.0 or main.fares.p10 == 150.0


def test_aggregate_low_volume_boundary():
    routes_ok = [
        _merged(f"R{i}", dest=f"X{i:02d}", fare=150.0, pax=120) for i in range(10)
    ]
    small = [_merged("S", dest="ZZZ", fare=150.0, pax=99)]
    exact = [_merged("E", dest="ZZY", fare=150.0, pax=100)]
    aggs, report = aggregate_db1b(routes_ok + small + exact, Q)
    assert report.dropped("db1b_low_volume") == 1
    routes = {a.route for a in aggs}
    assert ("IAD", "ZZY") in routes
    assert ("IAD", "ZZZ") not in routes


def test_aggregate_small_network_boundary():
    nine = [_merged(f"N{i}", carrier="ZN", dest=f"X{i:02d}", fare=150.0, pax=120)
            for i in range(9)]
    ten = [_merged(f"T{i}", carrier="ZT", dest=f"X{i:02d}", fare=150.0, pax=120)
           for i in range(10)]
    aggs, report = aggregate_db1b(nine + ten, Q)
    assert {a.carrier for a in aggs} == {"ZT"}
    assert report.dropped("db1b_small_network") == 9


def test_aggregate_collapses_directions_pooling_fares():
    routes_ok = [
        _merged(f"R{i}", dest=f"X{i:02d}", fare=150.0, pax=120) for i in range(9)
    ]
    out_dir = [_merged("D1", origin="IAD", dest="LAX", fare=100.0, pax=100)]
    back_dir = [_merged("D2", origin="LAX", dest="IAD", fare=300.0, pax=100)]
    aggs, _ = aggregate_db1b(routes_ok + out_dir + back_dir, Q)
    pooled = next(a for a in aggs if a.route == ("IAD", "LAX"))
    assert pooled.passengers == 200
    assert_allclose(pooled.fares.mean, 200.0)
    assert pooled.fares.p10 == 100.0
    assert pooled.fares.p90 == 300.0


def test_merge_supply_demand_join_and_load_factor():
    fares = FareDistribution(200.0, 150.0, 170.0, 240.0, 280.0)
    d1 = Db1bAggregate("UA", ("DEN", "SNA"), Q, 500, fares, 845.0)
    d2 = Db1bAggregate("UA", ("DEN", "PHX"), Q, 500, fares, 600.0)
    s1 = T100Aggregate("UA", ("DEN", "SNA"), Q, 7600, 10000)
    s3 = T100Aggregate("UA", ("ATL", "MCI"), Q, 5000, 9000)
    pairs, report = merge_supply_demand([d1, d2], [s1, s3])
    assert len(pairs) == 1
    demand, supply = pairs[0]
    assert supply.passengers / supply.seats == pytest.approx(0.76)
    assert report.dropped("merge_db1b_only") == 1
    assert report.dropped("merge_t100_only") == 1
    # join symmetry: the matched key set is the two-sided intersection
    keys_d = {(d.carrier, d.route, d.quarter) for d in [d1, d2]}
    keys_s = {(s.carrier, s.route, s.quarter) for s in [s1, s3]}
    assert {(d.carrier, d.route, d.quarter) for d, _ in pairs} == keys_d & keys_s


def _cpi(months, base):
    return CpiSeries(index=months, base_quarter=base)


def test_deflate_examples():
    cpi = _cpi({(2012, 3): 225.0, (2022, 3): 282.0}, Quarter(2022, 1))
    assert_allclose(deflate(300.0, Quarter(2012, 1), cpi), 376.0, atol=1e-9)
    assert deflate(123.0, Quarter(2022, 1), cpi) == 123.0
    cpi2 = _cpi({(2012, 3): 100.0, (2022, 3): 125.0}, Quarter(2022, 1))
    assert_allclose(deflate(100.0, Quarter(2012, 1), cpi2), 125.0)


def test_deflate_missing_month_names_it():
    cpi = _cpi({(2022, 3): 282.0}, Quarter(2022, 1))
    with pytest.raises(DeflationError, match="2012-03"):
        deflate(300.0, Quarter(2012, 1), cpi)


def test_deflation_composition():
    months = {(2005, 3): 180.0, (2010, 3): 205.0, (2015, 3): 231.0}
    q1, q2, q3 = Quarter(2005, 1), Quarter(2010, 1), Quarter(2015, 1)
    via = deflate(deflate(250.0, q1, _cpi(months, q2)), q2, _cpi(months, q3))
    direct = deflate(250.0, q1, _cpi(months, q3))
    assert abs(via - direct) / direct <= 1e-9


def test_temp_differential():
    airports = {"DEN": "CO", "SNA": "CA", "DAL": "TX"}
    temps = {("CO", 2006): 30.0, ("CA", 2006): 57.0, ("TX", 2006): 50.0}
    assert temp_differential(("DEN", "SNA"), 2006, airports, temps) == 27.0
    assert temp_differential(("SNA", "DEN"), 2006, airports, temps) == 27.0
    assert temp_differential(("DEN", "DEN"), 2006, airports, temps) == 0.0
    assert temp_differential(("DEN", "SNA"), 2007, airports, temps) is None
    assert temp_differential(("DEN", "XXX"), 2006, airports, temps) is None


def test_fare_distribution_percentile_ordering():
    with pytest.raises(IngestError):
        FareDistribution(mean=100.0, p10=120.0, p25=110.0, p75=100.0, p90=90.0)


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    directory = tmp_path_factory.mktemp("scenario")
    manifest = write_scenario_fixtures(directory)
    from entryscope.ingest import read_airport_states, read_state_temps

    cpi = read_cpi_csv(manifest.files["cpi"], base_quarter=SCENARIO_BASE_QUARTER)
    temps = read_state_temps(manifest.files["temps"])
    airports = read_airport_states(manifest.files["airport_state"])
    records, report = build_route_quarters(
        manifest.files["coupon"], manifest.files["ticket"], manifest.files["t100"],
        cpi, airports, temps,
    )
    return manifest, records, report


def test_pipeline_percentile_ordering(scenario):
    _, records, _ = scenario
    assert records
    for r in records:
        f = r.fares_real
        assert f.p10 <= f.p25 <= f.p75 <= f.p90
        assert r.db1b_passengers >= 100
        assert r.t100_passengers >= 2000 and r.t100_seats >= 2000
        assert_allclose(r.load_factor, r.t100_passengers / r.t100_seats)


def test_pipeline_drop_accounting(scenario):
    _, _, report = scenario
    # every recorded stage keeps dropped and retained consistent
    for stage, dropped, retained in report.stages:
        assert dropped >= 0 and retained >= 0, stage


def test_pipeline_deterministic_output(tmp_path):
    directory = tmp_path / "fixtures"
    manifest = write_scenario_fixtures(directory)
    from entryscope.ingest import read_airport_states, read_state_temps

    cpi = read_cpi_csv(manifest.files["cpi"], base_quarter=SCENARIO_BASE_QUARTER)
    temps = read_state_temps(manifest.files["temps"])
    airports = read_airport_states(manifest.files["airport_state"])
    args = (manifest.files["coupon"], manifest.files["ticket"], manifest.files["t100"],
            cpi, airports, temps)
    records1, _ = build_route_quarters(*args)
    records2, _ = build_route_quarters(*args)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_route_quarters_csv(records1, p1)
    write_route_quarters_csv(records2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert read_route_quarters_csv(p1) == records1
