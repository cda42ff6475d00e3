#!/usr/bin/env python3
"""Regenerates the committed test fixtures.

Every byte is written here with struct, independently of the C++ writers, so
the files double as reader oracles. Run from any directory; output lands next
to this script.
"""

import math
import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))


def path(*parts):
    p = os.path.join(HERE, *parts)
    os.makedirs(os.path.dirname(p), exist_ok=True)
    return p


def write_bytes(name, data):
    with open(path(name), "wb") as f:
        f.write(data)


def pfm(width, height, rows, little=True):
    """rows is top-to-bottom; PFM stores bottom-to-top."""
    fmt = "<f" if little else ">f"
    header = b"Pf\n%d %d\n%s\n" % (width, height, b"-1" if little else b"1")
    body = b"".join(struct.pack(fmt, rows[v][u]) for v in reversed(range(height)) for u in range(width))
    return header + body


def pgm(width, height, rows):
    header = b"P5\n%d %d\n255\n" % (width, height)
    return header + bytes(rows[v][u] for v in range(height) for u in range(width))


def sog(dims, voxel_size, origin, counts, labels, magic=b"SOG1"):
    out = magic + struct.pack("<III", *dims) + struct.pack("<f", voxel_size) + struct.pack("<fff", *origin)
    out += b"".join(struct.pack("<I", c) for c in counts)
    out += bytes(labels)
    return out


# --- camera and scene ---------------------------------------------------------

W, H = 64, 48
FX, FY, OX, OY, B = 100.0, 100.0, 31.5, 23.5, 0.5
CAM_HEIGHT = 1.5

ROAD, BUILDING, VEHICLE, UNLABELED = 0, 1, 2, 255


def scene(frame):
    """Road plane below the horizon, a building wall above it, and a vehicle
    box whose position depends on the frame index. Rows above the wall are sky
    with zero disparity and no label."""
    disp = [[0.0] * W for _ in range(H)]
    labels = [[UNLABELED] * W for _ in range(H)]
    wall_z = 12.0
    car_z = 5.0 + frame
    car_u0, car_u1 = 10 + 8 * frame, 26 + 8 * frame
    for v in range(H):
        for u in range(W):
            if v > OY + 2:
                # Ground plane at y = CAM_HEIGHT: d = b fx (v - oy) / (fy h).
                disp[v][u] = B * FX * (v - OY) / (FY * CAM_HEIGHT)
                labels[v][u] = ROAD
            elif v >= 8:
                disp[v][u] = B * FX / wall_z
                labels[v][u] = BUILDING
            if car_u0 <= u < car_u1 and 16 <= v < 34:
                disp[v][u] = B * FX / car_z
                labels[v][u] = VEHICLE
    return disp, labels


def write_scene():
    with open(path("intrinsics.txt"), "w") as f:
        f.write("# pinhole intrinsics and stereo baseline\n")
        f.write("fx=%g\nfy=%g\nox=%g\noy=%g\nb=%g\n" % (FX, FY, OX, OY, B))
    rows = []
    for k in range(3):
        disp, labels = scene(k)
        scale = 1.0
        if k == 2:
            # Stored at half scale; the manifest restores it.
            disp = [[d / 2.0 for d in row] for row in disp]
            scale = 2.0
        write_bytes("frames/frame_%03d.pfm" % k, pfm(W, H, disp))
        write_bytes("frames/frame_%03d.pgm" % k, pgm(W, H, labels))
        rows.append((k, scale))
    with open(path("manifest.csv"), "w") as f:
        f.write("frame_id,disparity,labels,scale\n")
        for k, scale in rows:
            cell = "%g" % scale if scale != 1.0 else ""
            f.write("frame_%03d,frames/frame_%03d.pfm,frames/frame_%03d.pgm,%s\n" % (k, k, k, cell))
    with open(path("occupancy.cfg"), "w") as f:
        f.write("# small grid for tests; origin defaults to laterally centered\n")
        f.write("grid=64x64x32\nvoxel_size=0.5\nmin_points=10\n")


def write_principal_point():
    with open(path("principal_intrinsics.txt"), "w") as f:
        f.write("f_x=500\nf_y=500\no_x=0\no_y=0\nbaseline=0.5\n")
    write_bytes("principal.pfm", pfm(1, 1, [[10.0]]))
    write_bytes("principal.pgm", pgm(1, 1, [[3]]))


def write_metrics_pair():
    gt = [[1.0 + 0.1 * u + 0.05 * v for u in range(16)] for v in range(8)]
    pred = [[(g - 1.0) / 2.0 + 0.01 * math.sin(u * 0.7 + v) for u, g in enumerate(row)] for v, row in enumerate(gt)]
    affine = [[(g - 1.0) / 2.0 for g in row] for row in gt]
    write_bytes("metrics/gt.pfm", pfm(16, 8, gt))
    write_bytes("metrics/pred.pfm", pfm(16, 8, pred))
    write_bytes("metrics/pred_affine.pfm", pfm(16, 8, affine))
    gt_l = [[(u // 4 + v // 4) % 3 for u in range(16)] for v in range(8)]
    pred_l = [[(u // 4 + (v + 1) // 4) % 3 for u in range(16)] for v in range(8)]
    write_bytes("metrics/gt_labels.pgm", pgm(16, 8, gt_l))
    write_bytes("metrics/pred_labels.pgm", pgm(16, 8, pred_l))
    mask = [[0 if u == 0 else 1 for u in range(16)] for v in range(8)]
    write_bytes("metrics/mask.pgm", pgm(16, 8, mask))


def write_boost():
    lo = [[0.5 * v + 0.25 * u for u in range(8)] for v in range(6)]
    hi = [[2.0 * (0.25 * v + 0.125 * u) + 1.0 + (0.2 if (u + v) % 2 else -0.2) for u in range(16)] for v in range(12)]
    write_bytes("boost/lo.pfm", pfm(8, 6, lo))
    write_bytes("boost/hi.pfm", pfm(16, 12, hi))


def write_hand_built():
    # 2x2 PFM, top row [1, 2], bottom row [3, 4]; little- and big-endian.
    write_bytes("hand/2x2_le.pfm", pfm(2, 2, [[1.0, 2.0], [3.0, 4.0]]))
    write_bytes("hand/2x2_be.pfm", pfm(2, 2, [[1.0, 2.0], [3.0, 4.0]], little=False))
    write_bytes("hand/1x2.pgm", pgm(2, 1, [[0, 7]]))
    write_bytes("hand/1x1x1.sog", sog((1, 1, 1), 0.5, (-1.0, 2.0, 0.0), [12], [4]))


def write_corrupt():
    good_pfm = pfm(2, 2, [[1.0, 2.0], [3.0, 4.0]])
    cases = [
        ("pfm_color.pfm", b"PF\n2 2\n-1\n" + b"\0" * 48, "MalformedHeader"),
        ("pfm_bad_magic.pfm", b"P7\n2 2\n-1\n" + b"\0" * 16, "MalformedHeader"),
        ("pfm_zero_width.pfm", b"Pf\n0 2\n-1\n", "MalformedHeader"),
        ("pfm_text_dims.pfm", b"Pf\ntwo 2\n-1\n" + b"\0" * 16, "MalformedHeader"),
        ("pfm_zero_scale.pfm", b"Pf\n2 2\n0\n" + b"\0" * 16, "MalformedHeader"),
        ("pfm_no_scale.pfm", b"Pf\n2 2\n", "MalformedHeader"),
        ("pfm_truncated.pfm", good_pfm[:-3], "TruncatedData"),
        ("pfm_huge_dims.pfm", b"Pf\n4294967296 4294967296\n-1\n" + b"\0" * 16, "TruncatedData"),
        ("pgm_ascii.pgm", b"P2\n2 1\n255\n0 7\n", "MalformedHeader"),
        ("pgm_maxval16.pgm", b"P5\n2 1\n65535\n" + b"\0" * 4, "MaxvalUnsupported"),
        ("pgm_no_maxval.pgm", b"P5\n2 1\n", "MalformedHeader"),
        ("pgm_zero_height.pgm", b"P5\n2 0\n255\n", "MalformedHeader"),
        ("pgm_truncated.pgm", b"P5\n4 4\n255\n" + b"\0" * 5, "TruncatedData"),
        ("sog_bad_magic.sog", sog((1, 1, 1), 0.5, (0, 0, 0), [1], [0], magic=b"SOG2"), "BadMagic"),
        ("sog_empty.sog", b"", "BadMagic"),
        ("sog_short_header.sog", b"SOG1" + struct.pack("<II", 1, 1), "SizeMismatch"),
        ("sog_short_payload.sog", sog((2, 1, 1), 0.5, (0, 0, 0), [1, 2], [0]), "SizeMismatch"),
        ("sog_long_payload.sog", sog((1, 1, 1), 0.5, (0, 0, 0), [1], [0, 0]), "SizeMismatch"),
        ("sog_huge_dims.sog", sog((0xFFFFFFFF, 0xFFFFFFFF, 0xFFFFFFFF), 0.5, (0, 0, 0), [1], [0]), "SizeMismatch"),
    ]
    with open(path("corrupt", "expected_errors.csv"), "w") as f:
        f.write("file,error\n")
        for name, data, err in cases:
            write_bytes(os.path.join("corrupt", name), data)
            f.write("%s,%s\n" % (name, err))


if __name__ == "__main__":
    write_scene()
    write_principal_point()
    write_metrics_pair()
    write_boost()
    write_hand_built()
    write_corrupt()
