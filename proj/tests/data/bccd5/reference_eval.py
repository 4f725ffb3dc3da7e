#!/usr/bin/env python3
"""Independent evaluator for the fixture; writes golden/report.txt.

Uses exact rational arithmetic for IoU, precision, recall and AP, and prints
the same report layout as `abcd eval` with default options.

    python3 reference_eval.py [annotations_dir predictions.jsonl out_file]
"""
import json
import sys
import xml.etree.ElementTree as ET
from fractions import Fraction as F
from pathlib import Path

CLASSES = ["RBC", "WBC", "Platelets"]
IOU = F(1, 2)
FLOOR = F(1, 4)
SWEEP = [F(50 + 5 * i, 100) for i in range(9)]


def load_gt(directory):
    gts = []
    files = sorted(Path(directory).glob("*.xml"))
    for path in files:
        root = ET.parse(path).getroot()
        w = int(root.find("size/width").text)
        h = int(root.find("size/height").text)
        for obj in root.findall("object"):
            name = obj.find("name").text.strip()
            if name not in CLASSES:
                continue
            bb = obj.find("bndbox")
            box = [F(bb.find(k).text.strip()) for k in ("xmin", "ymin", "xmax", "ymax")]
            box = [min(max(box[0], 0), w), min(max(box[1], 0), h),
                   min(max(box[2], 0), w), min(max(box[3], 0), h)]
            gts.append({"image": path.stem, "cls": CLASSES.index(name), "box": box})
    return len(files), gts


def load_preds(path):
    dets = []
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            # repr round-trips the double the C++ parser sees.
            dets.append({
                "image": rec["image_id"],
                "cls": CLASSES.index(rec["class"]),
                "score": F(repr(float(rec["score"]))),
                "box": [F(repr(float(v))) for v in rec["bbox"]],
            })
    return dets


def iou(a, b):
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    inter = iw * ih if iw > 0 and ih > 0 else F(0)
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else F(0)


def ranked(dets):
    return sorted(range(len(dets)), key=lambda i: -dets[i]["score"])  # stable


def greedy(dets, gts, thr, same_class):
    taken = [False] * len(gts)
    hit = [None] * len(dets)
    for i in ranked(dets):
        d = dets[i]
        best, best_iou = None, None
        for g, t in enumerate(gts):
            if taken[g] or t["image"] != d["image"]:
                continue
            if same_class and t["cls"] != d["cls"]:
                continue
            o = iou(d["box"], t["box"])
            if o >= thr and (best is None or o > best_iou):
                best, best_iou = g, o
        if best is not None:
            taken[best] = True
            hit[i] = best
    return hit, taken


def ap_for(dets, gts, cls, thr):
    n_gt = sum(1 for g in gts if g["cls"] == cls)
    if n_gt == 0:
        return None
    hit, _ = greedy(dets, gts, thr, True)
    flags = [hit[i] is not None for i in ranked(dets) if dets[i]["cls"] == cls]
    tp = 0
    prec = []
    rec = []
    for k, f in enumerate(flags, 1):
        tp += f
        prec.append(F(tp, k))
        rec.append(F(tp, n_gt))
    ap, prev = F(0), F(0)
    for k in range(len(flags)):
        ap += (rec[k] - prev) * max(prec[k:])
        prev = rec[k]
    return ap


def mean(values):
    vals = [v for v in values if v is not None]
    return sum(vals, F(0)) / len(vals)


def f1(p, r):
    return 2 * p * r / (p + r) if p + r else F(0)


def fx(v):
    return "undefined" if v is None else "%.6f" % float(v)


def report(n_images, gts, dets):
    out = []
    kept = [d for d in dets if d["score"] >= FLOOR]
    hit, taken = greedy(kept, gts, IOU, True)
    chit, ctaken = greedy(kept, gts, IOU, False)
    k = len(CLASSES)
    cm = [[0] * (k + 1) for _ in range(k + 1)]
    for i, d in enumerate(kept):
        row = k if chit[i] is None else gts[chit[i]]["cls"]
        cm[row][d["cls"]] += 1
    for g, t in enumerate(gts):
        if not ctaken[g]:
            cm[t["cls"]][k] += 1

    aps = {t: [ap_for(dets, gts, c, t) for c in range(k)] for t in SWEEP}
    rows = []
    psum = rsum = F(0)
    with_gt = 0
    for c in range(k):
        n_gt = sum(1 for g in gts if g["cls"] == c)
        tp = sum(1 for i, d in enumerate(kept) if d["cls"] == c and hit[i] is not None)
        fp = sum(1 for i, d in enumerate(kept) if d["cls"] == c and hit[i] is None)
        fn = sum(1 for g, t in enumerate(gts) if t["cls"] == c and not taken[g])
        p = F(tp, tp + fp) if tp + fp else F(0)
        r = F(tp, tp + fn) if tp + fn else F(0)
        acc = F(cm[c][c], sum(cm[c])) if sum(cm[c]) else F(0)
        rows.append((CLASSES[c], n_gt, tp, fp, fn, p, r, f1(p, r), aps[IOU][c], acc))
        if n_gt:
            psum += p
            rsum += r
            with_gt += 1
    mp, mr = psum / with_gt, rsum / with_gt
    map_by_t = [mean(aps[t]) for t in SWEEP]

    out.append("abcd evaluation report")
    out.append("images: %d" % n_images)
    out.append("ground_truth: %d" % len(gts))
    out.append("detections: %d" % len(dets))
    out.append("iou_threshold: 0.50")
    out.append("score_floor: 0.25")
    out.append("sweep: 0.50:0.90:0.05 (9 thresholds)")
    out.append("")
    out.append("%-10s %4s %4s %4s %4s %10s %10s %10s %10s %10s" % (
        "class", "gt", "tp", "fp", "fn", "precision", "recall", "f1", "ap@0.50", "cm_acc"))
    for name, n_gt, tp, fp, fn, p, r, f, ap, acc in rows:
        out.append("%-10s %4d %4d %4d %4d %10.6f %10.6f %10.6f %10s %10.6f" % (
            name, n_gt, tp, fp, fn, p, r, f, fx(ap), acc))
    out.append("")
    out.append("mAP@0.50: %.6f" % mean(aps[IOU]))
    out.append("mAP@0.50:0.90: %.6f" % (sum(map_by_t, F(0)) / len(SWEEP)))
    out.append("mean_precision: %.6f" % mp)
    out.append("mean_recall: %.6f" % mr)
    out.append("f1: %.6f" % f1(mp, mr))
    out.append("")
    out.append("ap_by_threshold")
    out.append("%-9s" % "threshold" + "".join(" %10s" % n for n in CLASSES) + " %10s" % "mAP")
    for t, m in zip(SWEEP, map_by_t):
        out.append("%-9.2f" % t + "".join(" %10s" % fx(a) for a in aps[t]) + " %10.6f" % m)
    out.append("")
    out.append("confusion (rows: ground truth, columns: prediction)")
    out.append("gt\\pred," + ",".join(CLASSES) + ",background")
    for r_i, row in enumerate(cm):
        label = "background" if r_i == k else CLASSES[r_i]
        out.append(label + "," + ",".join(str(v) for v in row))
    return "\n".join(out) + "\n"


def main():
    here = Path(__file__).resolve().parent
    args = sys.argv[1:] or [here / "annotations", here / "predictions.jsonl",
                            here / "golden" / "report.txt"]
    n_images, gts = load_gt(args[0])
    text = report(n_images, gts, load_preds(args[1]))
    Path(args[2]).write_text(text)


if __name__ == "__main__":
    main()
