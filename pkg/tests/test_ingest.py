import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chargeplace.errors import DataError
from chargeplace.ingest import (
    POI_CATEGORIES,
    GeoPoint,
    Poi,
    RegionData,
    Road,
    Station,
    build_features,
    disaggregate_energy,
    haversine_distance,
    load_region,
    offset_point,
    station_training_rows,
)

ORIGIN = GeoPoint(42.65, -73.75)


def at(south, east):
    return offset_point(ORIGIN, south, east)


def small_region(aadts=(100, 200, 300), road_offsets=None, pois=(), stations=()):
    road_offsets = road_offsets or [(3.0 * k, 0.0) for k in range(len(aadts))]
    roads = [Road(str(k), at(*off), float(a)) for k, (a, off) in enumerate(zip(aadts, road_offsets))]
    return RegionData(list(stations), roads, list(pois), {"12201": 450}, {"12201": 1000.0})


# --- haversine ---

def test_haversine_identity():
    p = GeoPoint(40.0, -74.0)
    assert haversine_distance(p, p) == 0.0


def test_haversine_antipodal_on_equator():
    assert haversine_distance(GeoPoint(0, 0), GeoPoint(0, 180)) == pytest.approx(math.pi * 6_371_000, rel=1e-12)


def test_haversine_short_hop_matches_hand_value():
    # 2R asin(cos 40deg sin 0.005deg), evaluated at 30 digits
    d = haversine_distance(GeoPoint(40.0, -74.0), GeoPoint(40.0, -74.01))
    assert d == pytest.approx(851.802556144164609, rel=1e-12)


coords = st.tuples(st.floats(-89.0, 89.0), st.floats(-179.0, 179.0)).map(lambda t: GeoPoint(*t))


@given(coords, coords, coords)
@settings(max_examples=200, deadline=None)
def test_haversine_triangle_inequality_and_symmetry(a, b, c):
    ab, bc, ac = haversine_distance(a, b), haversine_distance(b, c), haversine_distance(a, c)
    assert ab == pytest.approx(haversine_distance(b, a), rel=1e-12, abs=1e-6)
    assert ac <= (ab + bc) * (1 + 1e-6) + 1e-6


def test_geopoint_rejects_out_of_range():
    with pytest.raises(ValueError):
        GeoPoint(91.0, 0.0)
    with pytest.raises(ValueError):
        GeoPoint(0.0, -181.0)


# --- build_features ---

def test_traffic_density_is_mean_of_three_close_roads():
    f = build_features(small_region(), ORIGIN, "12201")
    assert f.t_s == 200.0


def test_no_pois_gives_zero_counts():
    f = build_features(small_region(), ORIGIN, "12201")
    assert f.poi_counts == (0,) * 13
    assert len(f.to_vector()) == 18


def test_nearest_three_roads_against_brute_force():
    rng = np.random.default_rng(3)
    offsets = [tuple(rng.uniform(-900, 900, 2)) for _ in range(5)]
    aadts = [1000, 2500, 400, 9000, 7000]
    region = small_region(aadts, offsets)
    site = at(50.0, -20.0)
    dists = sorted((haversine_distance(site, r.point), int(r.id), r.aadt) for r in region.roads)
    expected = sum(a for _, _, a in dists[:3]) / 3
    assert build_features(region, site, "12201").t_s == pytest.approx(expected, rel=1e-15)


def test_road_ties_broken_by_id():
    # four roads at the same point: ids 0..2 win over id 10 regardless of listing order
    pt = at(10, 10)
    roads = [Road("10", pt, 1000.0), Road("2", pt, 30.0), Road("0", pt, 10.0), Road("1", pt, 20.0)]
    region = RegionData([], roads, [], {}, {})
    assert build_features(region, ORIGIN, "x").t_s == 20.0


def test_radius_predicates_are_strict_and_exclude_own_site():
    site = ORIGIN
    stations = [
        Station("self", site, "12201", 2, 0),
        Station("near", at(999.0, 0.0), "12201", 1, 0),
        Station("far", at(1001.0, 0.0), "12201", 1, 0),
    ]
    pois = [
        Poi("a", at(0.0, 499.0), "education"),
        Poi("b", at(0.0, 501.0), "education"),
        Poi("c", at(100.0, 0.0), "worship"),
    ]
    region = small_region(pois=pois, stations=stations)
    f = build_features(region, site, "12201", (2, 1))
    assert f.n_s == 1
    assert f.poi_counts[POI_CATEGORIES.index("education")] == 1
    assert f.poi_counts[POI_CATEGORIES.index("worship")] == 1
    assert (f.p_c, f.p_d, f.v_s) == (2, 1, 450.0)


def test_missing_zip_gives_zero_registrations(caplog):
    f = build_features(small_region(), ORIGIN, "99999")
    assert f.v_s == 0.0
    assert "99999" in caplog.text


def test_insufficient_roads():
    region = RegionData([], [Road("0", ORIGIN, 10.0), Road("1", ORIGIN, 10.0)], [], {}, {})
    with pytest.raises(DataError, match="insufficient road data"):
        build_features(region, ORIGIN, "x")


def test_features_invariant_to_row_order():
    rng = np.random.default_rng(11)
    roads = [Road(str(k), at(*rng.uniform(-2000, 2000, 2)), float(rng.integers(0, 5000))) for k in range(30)]
    pois = [Poi(str(k), at(*rng.uniform(-800, 800, 2)), POI_CATEGORIES[k % 13]) for k in range(80)]
    stations = [Station(str(k), at(*rng.uniform(-1500, 1500, 2)), "12201", 1, 0) for k in range(12)]
    base = RegionData(stations, roads, pois, {"12201": 5}, {})
    perm = RegionData(stations[::-1], [roads[i] for i in rng.permutation(30)],
                      [pois[i] for i in rng.permutation(80)], {"12201": 5}, {})
    for site in [ORIGIN, at(300, -200), at(-1000, 50)]:
        assert build_features(base, site, "12201") == build_features(perm, site, "12201")


# --- disaggregate_energy ---

def test_single_charger_gets_everything():
    assert disaggregate_energy(812.5, [40], "proportional") == [812.5]
    assert disaggregate_energy(812.5, [40], "paper-literal") == [812.5]


def test_symmetric_split():
    assert disaggregate_energy(11_036, [1000, 1000]) == [5518.0, 5518.0]


def test_two_modes_by_hand():
    assert disaggregate_energy(100, [1000, 3000]) == pytest.approx([25.0, 75.0])
    assert disaggregate_energy(100, [1000, 3000], "paper-literal") == pytest.approx([50.0, 150.0])


def test_zero_traffic_cannot_be_apportioned():
    with pytest.raises(DataError, match="cannot apportion energy"):
        disaggregate_energy(100, [0, 0])


@given(
    st.floats(0.0, 1e7),
    st.lists(st.floats(1.0, 1e6), min_size=1, max_size=25),
)
def test_disaggregation_totals(e_total, aadts):
    prop = disaggregate_energy(e_total, aadts)
    lit = disaggregate_energy(e_total, aadts, "paper-literal")
    assert abs(math.fsum(prop) - e_total) <= 1e-9 * e_total + 1e-12
    assert abs(math.fsum(lit) - len(aadts) * e_total) <= 1e-9 * len(aadts) * e_total + 1e-12


def test_training_rows_attach_targets_per_zip():
    stations = [
        Station("a", at(0, 0), "z1", 2, 0),
        Station("b", at(0, 2000), "z1", 2, 0),
        Station("c", at(2000, 0), "z2", 1, 1),
        Station("d", at(2000, 2000), "z9", 1, 1),
    ]
    roads = [Road(str(k), at(s, e), a) for k, (s, e, a) in enumerate(
        [(0, 5, 100), (5, 0, 100), (5, 5, 100), (0, 2005, 300), (5, 2000, 300), (5, 2005, 300), (2000, 5, 50)]
    )]
    region = RegionData(stations, roads, [], {"z1": 10, "z2": 20}, {"z1": 1000.0, "z2": 80.0})
    rows = station_training_rows(region)
    targets = {st.id: f.target_kwh for st, f in rows}
    assert set(targets) == {"a", "b", "c"}
    assert targets["a"] == pytest.approx(250.0)
    assert targets["b"] == pytest.approx(750.0)
    assert targets["c"] == pytest.approx(80.0)


# --- CSV loading ---

def write_region(tmp_path, stations=None, roads=None):
    files = {
        "stations.csv": stations or "id,lat,lon,zip,level2_ports,dcfc_ports\ns1,42.65,-73.75,12201,2,1\n",
        "roads.csv": roads or "id,lat,lon,aadt\nr1,42.651,-73.75,1000\nr2,42.652,-73.75,2000\nr3,42.653,-73.75,3000\n",
        "pois.csv": "id,lat,lon,category\np1,42.6501,-73.75,healthcare\n",
        "ev_registrations.csv": "zip,count\n12201,77\n",
        "zip_energy.csv": "zip,kwh_month\n12201,5000.5\n",
    }
    for name, text in files.items():
        (tmp_path / name).write_text(text, encoding="utf-8")
    return [tmp_path / n for n in files]


def test_load_region_round_trip(tmp_path):
    region = load_region(*write_region(tmp_path))
    assert region.stations[0].level2_ports == 2
    assert [r.aadt for r in region.roads] == [1000.0, 2000.0, 3000.0]
    assert region.pois[0].category == "healthcare"
    assert region.ev_registrations == {"12201": 77}
    assert region.zip_energy == {"12201": 5000.5}
    f = build_features(region, region.stations[0].point, "12201", (2, 1))
    assert f.t_s == 2000.0
    assert f.poi_counts[POI_CATEGORIES.index("healthcare")] == 1


@pytest.mark.parametrize(
    "roads, message",
    [
        ("id,lat,lon,aadt\nr1,42.65,-73.75,100\nr2,42.65,oops,100\n", r"roads.csv:3: bad lon"),
        ("id,lat,lon,aadt\nr1,42.65,-73.75,-5\n", r"roads.csv:2: aadt must be nonnegative"),
        ("id,lat,lon,aadt\nr1,42.65,-73.75\n", r"roads.csv:2: wrong number of fields"),
        ("id,lat,lon\nr1,42.65,-73.75\n", r"lacks column"),
        ("id,lat,lon,aadt\nr1,95.0,-73.75,10\n", r"roads.csv:2: coordinates out of range"),
    ],
)
def test_malformed_rows_name_the_line(tmp_path, roads, message):
    paths = write_region(tmp_path, roads=roads)
    with pytest.raises(DataError, match=message):
        load_region(*paths)


def test_unknown_poi_category(tmp_path):
    paths = write_region(tmp_path)
    paths[2].write_text("id,lat,lon,category\np1,42.65,-73.75,casino\n", encoding="utf-8")
    with pytest.raises(DataError, match=r"pois.csv:2: unknown POI category"):
        load_region(*paths)
