"""Desk-scale Monte Carlo accuracy table.

Runs a reduced replication count over a (phi, n) grid and prints the
average estimates, relative bias, and MSE for the pairwise fit and the
full-ML baseline, in the layout of the accuracy tables the harness is
built to reproduce (reps=100 gives the reported precision; this demo
uses 30 to stay quick).
"""

from pairlik import McConfig, RadiusSpec, run_montecarlo

mc = McConfig(phis=(0.8, 1.0), ns=(200, 800), reps=30,
              radius_specs=(RadiusSpec.mean(),), knn_k=5,
              base_seed=515, run_fl=True)
report = run_montecarlo(mc)

print(f"{'phi':>4} {'n':>5} {'q':>6} | {'beta_PL':>8} {'beta_FL':>8} "
      f"{'sigma_PL':>8} {'sigma_FL':>8} | {'psi_PL':>7} {'rho_FL':>7}")
for row in report.rows:
    print(f"{row.phi:4.1f} {row.n:5d} {row.q_mean:6.1f} | "
          f"{row.pl_beta.ave:8.5f} {row.fl_beta.ave:8.5f} "
          f"{row.pl_sigma.ave:8.5f} {row.fl_sigma.ave:8.5f} | "
          f"{row.pl_psi.ave:+7.4f} {row.fl_rho.ave:+7.4f}")

print("\nrelative bias and MSE (PL, FL) for beta:")
for row in report.rows:
    print(f"  phi={row.phi:3.1f} n={row.n:4d}: "
          f"RB=({row.pl_beta.rel_bias:.5f}, {row.fl_beta.rel_bias:.5f})  "
          f"MSE=({row.pl_beta.mse:.6f}, {row.fl_beta.mse:.6f})")

row = report.row(1.0, 800, "mean")
print(f"\npsi consistency at phi=1, n=800: psi_ave={row.pl_psi.ave:+.4f}, "
      f"paired-residual corr={row.pearson_ave:+.4f}, "
      f"kernel-implied corr={row.model_corr_ave:+.4f}")
print(f"median wall-clock per rep: pair {row.t_pair_median * 1e3:.1f} ms, "
      f"PL solve {row.t_pl_median * 1e3:.2f} ms, "
      f"FL {row.t_fl_median * 1e3:.1f} ms")
