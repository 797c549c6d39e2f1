import math

MU0 = 4e-7 * math.pi  # vacuum permeability [H/m]

# Orientation of every reported transfer matrix. The raw composition
# +lambda^2 M^T (R + lambda L)^-1 M is Loewner-antitone in resistivity; the
# flipped sign makes alpha <= beta map to H_alpha <= H_beta. Reproduced by
# mitmono.monotonicity.sign_convention_experiment().
SIGN_CONVENTION = -1

# Relative floor used for noiseless PSD decisions.
NOISELESS_RTOL = 1e-12
