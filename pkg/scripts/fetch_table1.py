#!/usr/bin/env python3
"""Download the ten-matrix Matrix Market benchmark suite.

Fetches utm3060, utm1700a, utm1700b, fidap029, sherman5, mcfe, memplus,
add32, mcca, and fs_680_3 into data/matrix-market/ (or AAR_MATRIX_DIR, or
--dest).  Each matrix has several candidate URLs: the NIST MatrixMarket
mirror serves gzipped .mtx files and the SuiteSparse collection serves
tarballs; whichever answers first wins.  Already-present files are kept.

The SuiteSparse FIDAP group names its matrices exNN; ex29 is the same matrix
as MatrixMarket's fidap029 and is renamed on download.
"""

from __future__ import annotations

import argparse
import gzip
import io
import os
import sys
import tarfile
import urllib.error
import urllib.request
from pathlib import Path

NIST = "https://math.nist.gov/pub/MatrixMarket2"
SUITESPARSE = "https://suitesparse-collection-website.herokuapp.com/MM"
TAMU = "https://sparse.tamu.edu/MM"

# candidate URLs in preference order; .gz holds one .mtx, .tar.gz holds
# <name>/<name>.mtx
MATRICES: dict[str, list[str]] = {
    "utm3060": [
        f"{NIST}/SPARSKIT/tokamak/utm3060.mtx.gz",
        f"{SUITESPARSE}/TOKAMAK/utm3060.tar.gz",
        f"{TAMU}/TOKAMAK/utm3060.tar.gz",
    ],
    "utm1700a": [
        f"{NIST}/SPARSKIT/tokamak/utm1700a.mtx.gz",
        f"{SUITESPARSE}/TOKAMAK/utm1700a.tar.gz",
        f"{TAMU}/TOKAMAK/utm1700a.tar.gz",
    ],
    "utm1700b": [
        f"{NIST}/SPARSKIT/tokamak/utm1700b.mtx.gz",
        f"{SUITESPARSE}/TOKAMAK/utm1700b.tar.gz",
        f"{TAMU}/TOKAMAK/utm1700b.tar.gz",
    ],
    "fidap029": [
        f"{NIST}/SPARSKIT/fidap/fidap029.mtx.gz",
        f"{SUITESPARSE}/FIDAP/ex29.tar.gz",
        f"{TAMU}/FIDAP/ex29.tar.gz",
    ],
    "sherman5": [
        f"{NIST}/harwell-boeing/sherman/sherman5.mtx.gz",
        f"{SUITESPARSE}/HB/sherman5.tar.gz",
        f"{TAMU}/HB/sherman5.tar.gz",
    ],
    "mcfe": [
        f"{NIST}/harwell-boeing/astroph/mcfe.mtx.gz",
        f"{NIST}/harwell-boeing/mcfe/mcfe.mtx.gz",
        f"{SUITESPARSE}/HB/mcfe.tar.gz",
        f"{TAMU}/HB/mcfe.tar.gz",
    ],
    "memplus": [
        f"{NIST}/misc/hamm/memplus.mtx.gz",
        f"{SUITESPARSE}/Hamm/memplus.tar.gz",
        f"{TAMU}/Hamm/memplus.tar.gz",
    ],
    "add32": [
        f"{NIST}/misc/hamm/add32.mtx.gz",
        f"{SUITESPARSE}/Hamm/add32.tar.gz",
        f"{TAMU}/Hamm/add32.tar.gz",
    ],
    "mcca": [
        f"{NIST}/harwell-boeing/astroph/mcca.mtx.gz",
        f"{NIST}/harwell-boeing/mcca/mcca.mtx.gz",
        f"{SUITESPARSE}/HB/mcca.tar.gz",
        f"{TAMU}/HB/mcca.tar.gz",
    ],
    "fs_680_3": [
        f"{NIST}/harwell-boeing/facsimile/fs_680_3.mtx.gz",
        f"{NIST}/harwell-boeing/fs/fs_680_3.mtx.gz",
        f"{SUITESPARSE}/HB/fs_680_3.tar.gz",
        f"{TAMU}/HB/fs_680_3.tar.gz",
    ],
}


def default_dest() -> Path:
    env = os.environ.get("AAR_MATRIX_DIR", "").strip()
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[1] / "data" / "matrix-market"


def download(url: str, timeout: float) -> bytes:
    request = urllib.request.Request(url, headers={"User-Agent": "aarsolve-fetch/0.1"})
    with urllib.request.urlopen(request, timeout=timeout) as response:
        return response.read()


def extract_mtx(payload: bytes, url: str) -> bytes:
    if url.endswith(".tar.gz"):
        with tarfile.open(fileobj=io.BytesIO(payload), mode="r:gz") as tar:
            members = [m for m in tar.getmembers() if m.name.endswith(".mtx")]
            if not members:
                raise ValueError("tarball contains no .mtx member")
            # the main matrix is the member without a _b/_x/coord suffix,
            # i.e. the shortest name
            member = min(members, key=lambda m: len(m.name))
            handle = tar.extractfile(member)
            if handle is None:
                raise ValueError(f"cannot extract {member.name}")
            return handle.read()
    if url.endswith(".gz"):
        return gzip.decompress(payload)
    return payload


def looks_like_matrix(blob: bytes) -> bool:
    return blob.lstrip()[:15].lower() == b"%%matrixmarket "


def fetch_one(name: str, urls: list[str], dest: Path, timeout: float) -> bool:
    target = dest / f"{name}.mtx"
    if target.is_file():
        print(f"{name}: already present")
        return True
    for url in urls:
        try:
            payload = download(url, timeout)
            blob = extract_mtx(payload, url)
        except (urllib.error.URLError, OSError, ValueError, tarfile.TarError, EOFError) as exc:
            print(f"{name}: {url} failed ({exc})")
            continue
        if not looks_like_matrix(blob):
            print(f"{name}: {url} did not return a Matrix Market file")
            continue
        target.write_bytes(blob)
        print(f"{name}: wrote {target} ({len(blob)} bytes) from {url}")
        return True
    print(f"{name}: all sources failed", file=sys.stderr)
    return False


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", type=Path, default=None, help="target directory")
    parser.add_argument("--timeout", type=float, default=60.0, help="per-request timeout seconds")
    parser.add_argument("names", nargs="*", help="subset of matrices (default: all ten)")
    args = parser.parse_args(argv)
    dest = args.dest if args.dest is not None else default_dest()
    dest.mkdir(parents=True, exist_ok=True)
    names = args.names or list(MATRICES)
    unknown = [n for n in names if n not in MATRICES]
    if unknown:
        parser.error(f"unknown matrices: {', '.join(unknown)}")
    failures = [n for n in names if not fetch_one(n, MATRICES[n], dest, args.timeout)]
    if failures:
        print(f"failed: {', '.join(failures)}", file=sys.stderr)
        return 1
    print(f"all matrices available under {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
