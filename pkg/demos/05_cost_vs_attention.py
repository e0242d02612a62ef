"""Compare the mixer layer's analytic cost against full self-attention.

The mixer's MACs grow linearly with sequence length T; attention's mixing
term grows with T^2. The table below makes the crossover visible, then a
short wall-clock benchmark of the real layer backs the analytic counts.

Run:  python3 demos/05_cost_vs_attention.py
"""

from pillarmix import BenchSpec, attention_flops_reference, bench_layer, layer_flops

C, K = 128, 11


def main() -> None:
    print(f"analytic MACs at C={C}, K={K} (batch 1):")
    print(f"{'T':>6} {'mixer':>15} {'attention':>15} {'ratio':>7}")
    for t in (256, 1024, 4096, 16384):
        mixer = layer_flops(1, t, C, K).macs
        attn = attention_flops_reference(1, t, C).macs
        print(f"{t:>6} {mixer:>15,} {attn:>15,} {attn / mixer:>6.2f}x")

    # time the real thing on a few shapes; medians over 3 repeats
    spec = BenchSpec(shapes=((1, 2048, C), (2, 1024, C), (8, 256, C)),
                     kernel=K, repeats=3, warmup=1, seed=0)
    rows = bench_layer(spec)
    print(f"\nwall clock (equal work split into batches of groups, {spec.repeats} repeats):")
    for r in rows:
        print(f"  B={r.b} T={r.t:>5} C={r.c} K={r.k}  {r.macs:,} MACs  "
              f"median {r.median_ms:.3f} ms  (p10 {r.p10_ms:.3f} / p90 {r.p90_ms:.3f})")


if __name__ == "__main__":
    main()
