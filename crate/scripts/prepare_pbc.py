"""Build the bundled PBC dataset from the Mayo Clinic trial data.

Reads the `pbc` table shipped with R's `survival` package (here loaded
through the `rdatasets` Python package) and writes data/pbc.csv:

  * keep the 312 randomized subjects (non-missing `trt`)
  * drop `chol` and `trig` (most missing values), then drop remaining
    rows with any missing value
  * status: 2 (death) -> 1, 0 (censored) and 1 (transplant) -> 0
  * sex: f -> 0, m -> 1
  * trt: 1 (D-penicillamine) -> 1, 2 (placebo) -> 0
  * age rounded to full years
"""
import sys

import rdatasets

df = rdatasets.data("survival", "pbc")
df = df[df["trt"].notna()].copy()
df = df.drop(columns=["rownames", "id", "chol", "trig"], errors="ignore")
df = df.dropna()
df["status"] = (df["status"] == 2).astype(int)
df["sex"] = (df["sex"] == "m").astype(int)
df["trt"] = (df["trt"] == 1).astype(int)
df["age"] = df["age"].round().astype(int)
df = df.rename(columns={"alk.phos": "alk_phos"})
cols = ["time", "status"] + [c for c in df.columns if c not in ("time", "status")]
out = sys.argv[1] if len(sys.argv) > 1 else "pbc.csv"
df[cols].to_csv(out, index=False)
print(f"wrote {len(df)} rows to {out}")
