"""Feature vectors for existing and hypothetical charger sites.

Builds a random region, prints the 18 features of one station and of an
empty spot near the traffic hot spot, then splits one ZIP's monthly energy
across its stations.
"""

from chargeplace.ingest import FEATURE_NAMES, GeoPoint, build_features, disaggregate_energy, offset_point, station_training_rows
from chargeplace.synthetic import synthetic_region

region = synthetic_region(seed=3)
print(f"{len(region.stations)} stations, {len(region.roads)} road segments, {len(region.pois)} POIs")

station = region.stations[0]
feat = build_features(region, station.point, station.zip, (station.level2_ports, station.dcfc_ports))
print(f"\nstation {station.id} in ZIP {station.zip}")
for name, value in zip(FEATURE_NAMES, feat.to_vector()):
    if value:
        print(f"  {name:>4} = {value:g}")

# the synthetic region's traffic hot spot lies 1625 m south and east of its corner
for label, (south, east) in (("at the hot spot", (1625, 1625)), ("far corner", (6000, 6000))):
    f = build_features(region, offset_point(GeoPoint(42.65, -73.80), south, east), "12201")
    print(f"\nempty site {label}: t_s {f.t_s:.0f}, n_s {f.n_s}, POIs {sum(f.poi_counts)}")

# splitting one ZIP's energy: shares follow each station's traffic
rows = station_training_rows(region)
zip_code = rows[0][0].zip
members = [(st, f) for st, f in rows if st.zip == zip_code]
aadts = [f.t_s for _, f in members]
shares = disaggregate_energy(region.zip_energy[zip_code], aadts)
print(f"\nZIP {zip_code}: {region.zip_energy[zip_code]:.1f} kWh over {len(members)} stations")
for (st, _), t, e in list(zip(members, aadts, shares))[:5]:
    print(f"  station {st.id:>3}  traffic {t:8.0f}  energy {e:8.1f} kWh")
print(f"  shares sum to {sum(shares):.6f}")
literal = disaggregate_energy(region.zip_energy[zip_code], aadts, mode="paper-literal")
print(f"  the literal formula sums to {sum(literal):.1f}, i.e. {sum(literal) / region.zip_energy[zip_code]:.0f}x the total")
