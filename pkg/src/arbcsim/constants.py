"""Physical constants (CODATA, 6 significant digits)."""

PLANCK_H = 6.62607e-34  # J*s
ELECTRON_CHARGE = 1.60218e-19  # C
BOLTZMANN_K = 1.38065e-23  # J/K
ZERO_CELSIUS_K = 273.15

# Li-ion thresholds from the charging profile.
TC_CC_THRESHOLD_V = 3.0
CC_CV_THRESHOLD_V = 4.2
MIN_CURRENT_MA = 20.0
SESSION_CUTOFF_H = 3.6

# RBC baseline: 1 A at 4.2 V, for 15.20 Wh of battery energy.
RBC_BATTERY_POWER_W = 4.2
RBC_BATTERY_ENERGY_WH = 15.20
RBC_DURATION_H = RBC_BATTERY_ENERGY_WH / RBC_BATTERY_POWER_W
