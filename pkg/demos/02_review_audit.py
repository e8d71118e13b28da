"""
Auditing a table of published ratios
====================================

The bundled review table lists 79 published results with the three
performance numbers and the ratios the original authors' summary reported.
Inputs were printed with limited precision, so rather than recomputing a
single number we recompute an interval over everything the printed digits
could stand for, and ask whether the published ratio falls inside it.
"""

# %%
from hcsynergy.review import (
    Verdict,
    audit,
    histogram_tsv,
    load_dataset,
    subset_by_direction,
    subset_top_per_study,
    summarize,
)

records = load_dataset()
print(len(records), "records from", len({r.study_id for r in records}), "studies")

# %%
# One row in detail: 57% / 50% / 78% means each value lies within +-0.005.
rep = audit(records[:1])[0]
print("rho_hat' interval:", [round(v, 4) for v in rep.rho_hat_prime.interval],
      "published:", rep.rho_hat_prime.published, "->", rep.verdict.value)

# %%
# Across the whole table
# ----------------------
for rep in audit(records):
    if rep.verdict is Verdict.ANOMALOUS:
        rec = records[rep.index]
        which = "rho_hat" if rep.rho_hat.verdict is Verdict.ANOMALOUS else "rho_hat'"
        print(f"row {rep.index:2d} {rec.study_id:<26} {rec.measure:<12} {which}: {rec.anomaly_flag}")

# %%
# Summaries
# ---------
# The Steps rows print the untransformed ratio in the first column. Reading
# the transformed value for those rows gives the audited column.
for which in ("published_rho_hat", "published_rho_hat_lower"):
    s = summarize(records, which)
    print(f"{which:<25} mean={s.mean:.3f} median={s.median:.2f} "
          f"synergy={s.synergy_count}/{s.n} range=[{s.min}, {s.max}]")

# %%
# Keeping only the best result of each study raises every statistic, by
# construction.
top = subset_top_per_study(records, "published_rho_hat_lower")
s = summarize(top, "published_rho_hat_lower")
print(f"top per study: n={s.n} mean={s.mean:.3f} median={s.median:.2f} synergy={s.synergy_count}/{s.n}")
print("lower-is-better rows:", len(subset_by_direction(records, "lower")))

# %%
# Plot-ready histogram (bin midpoint, count).
print(histogram_tsv(summarize(records, "published_rho_hat_lower").histogram))
