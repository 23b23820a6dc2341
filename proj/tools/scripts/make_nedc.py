"""Writes the 1180-sample NEDC speed profile (km/h, 1 Hz) to stdout.

The profile is rebuilt from the operation tables of the regulation: four
urban ECE-15 cycles (195 s each) followed by one extra-urban EUDC (400 s).
Gear-shift phases are folded into linear ramps.
"""

ECE = [  # (duration_s, end_speed_kmh); ramps are linear from the previous speed
    (11, 0), (4, 15), (8, 15), (5, 0), (21, 0),
    (12, 32), (24, 32), (11, 0), (21, 0),
    (26, 50), (12, 50), (8, 35), (13, 35), (12, 0), (7, 0),
]
EUDC = [
    (20, 0), (41, 70), (50, 70), (8, 50), (69, 50), (13, 70), (50, 70),
    (35, 100), (30, 100), (20, 120), (10, 120), (16, 80), (8, 50), (10, 0), (20, 0),
]


def breakpoints():
    t, v = 0.0, 0.0
    points = [(t, v)]
    for duration, end in ECE * 4 + EUDC:
        t += duration
        points.append((t, float(end)))
    return points


def speed_at(points, t):
    for (t0, v0), (t1, v1) in zip(points, points[1:]):
        if t0 <= t <= t1:
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    return points[-1][1]


def main():
    points = breakpoints()
    assert points[-1][0] == 1180
    speeds = [speed_at(points, t) for t in range(1180)]
    distance = sum(speeds) / 3600
    assert abs(distance - 11.0) < 0.15, distance  # ramps smooth out gear shifts
    for v in speeds:
        print(f"{v:.4f}".rstrip("0").rstrip("."))


if __name__ == "__main__":
    main()
