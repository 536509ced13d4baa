"""Hand-traced metric fixtures shared by unit, acceptance and CLI tests."""


def _box(identity: int, frame: int):
    # identity 1 walks right along y=100, identity 2 walks left along y=400; never close
    if identity == 1:
        return (100.0 + 10.0 * frame, 100.0, 40.0, 100.0)
    return (600.0 - 10.0 * frame, 400.0, 40.0, 100.0)


def perfect_fixture(frames: int = 10):
    gt = [[(1, _box(1, f)), (2, _box(2, f))] for f in range(frames)]
    pred = [[(11, _box(1, f)), (12, _box(2, f))] for f in range(frames)]
    return gt, pred


def ten_frame_fixture():
    """Two identities over 10 frames (20 GT boxes).

    Track 11 follows GT 1 and track 12 follows GT 2 for frames 0-4; from frame
    5 on the ids are exchanged (two switches). At frame 8 the box on GT 1 is
    missing (one FN). Counts: FP 0, FN 1, IDSW 2, so MOTA = 1 - 3/20 = 0.85.
    Identity overlaps: (1,11)=5, (1,12)=4, (2,12)=5, (2,11)=5, best one-to-one
    sum 10, so IDF1 = 2*10 / (20 + 19) = 20/39.
    """
    gt = [[(1, _box(1, f)), (2, _box(2, f))] for f in range(10)]
    pred = []
    for f in range(10):
        a, b = (11, 12) if f < 5 else (12, 11)
        row = [(a, _box(1, f)), (b, _box(2, f))]
        if f == 8:
            row = [row[1]]
        pred.append(row)
    return gt, pred


def swap_fixture():
    """Four frames; predicted ids exchange at frame 2: IDSW = 2, nothing else wrong."""
    gt = [[(1, _box(1, f)), (2, _box(2, f))] for f in range(4)]
    pred = [[(7 if f < 2 else 8, _box(1, f)), (8 if f < 2 else 7, _box(2, f))] for f in range(4)]
    return gt, pred


TEN_FRAME_EXPECTED = {"mota": 0.85, "fp": 0, "fn": 1, "idsw": 2, "gt_total": 20, "idtp": 10, "idf1": 20 / 39}
