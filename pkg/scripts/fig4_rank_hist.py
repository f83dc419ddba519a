"""Per-dimension interference energy of a time-domain jammer that respects
or violates the cyclic prefix (B = 16 receive antennas)."""
from _common import out_dir, parser, write_json

from jamsim.config import ChannelConfig, Scenario
from jamsim.grid import build_grid_spec
from jamsim.harness import rank_summary, run_rank_hist
from jamsim.jammer import JammerConfig
from jamsim.ofdm import OfdmParams


def main():
    args = parser(__doc__).parse_args()
    d = out_dir(args)
    n = 4 if args.quick else 40
    B = 16
    for compliant, L in ((True, 5), (False, 16)):
        scn = Scenario(grid=build_grid_spec(1, 0, 64, 32), n_rx=B, seed=args.seed,
                       channel=ChannelConfig("tdl", L, 4.0), ofdm=OfdmParams(32, 4, 64), rho_max_db=0.0,
                       jammer=JammerConfig("time_barrage", dist="gaussian", cp_compliant=compliant))
        summ = rank_summary(run_rank_hist(scn, n))
        tag = "compliant" if compliant else "violating"
        write_json(d / f"fig4_{tag}.json", summ)
        print(f"{tag}: median rank {summ['median_rank']:.0f}, residual after one null "
              f"{summ['median_residual_after_1_null']:.3f}")
        print("  mean fractions", " ".join(f"{f:.3f}" for f in summ["mean_fractions"]))


if __name__ == "__main__":
    main()
