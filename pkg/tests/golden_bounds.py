"""Frozen bounds-engine values from an independent mpmath evaluation."""

# (B, m, d, V_max, V_min, n, delta) and the values of an independent
# 40-digit mpmath evaluation (tanh-sinh quadrature directly in epsilon)
POINTS = [
    (1.0, 16, 1, 1.0, 1.0, 10**6, 0.1),
    (0.5, 4, 2, 2.0, 0.5, 1000, 0.05),
    (2.0, 64, 1, 1.5, 0.5, 16384, 0.1),
    (1.5, 32, 3, 3.0, 1.0, 4096, 0.2),
    (0.25, 256, 2, 10.0, 1.0, 10**8, 0.01),
]
GOLDEN = [
    dict(M_F=16.0, M_1=256.0, M_2=512.0, Lambda1=468.0, Lambda2=732.0, lnM1=377.5753404950721, R1=37.831487762016146, R2=72.533733308686574, xi1=78.444367428269081, xi2=150.63025042584672, xi3=0.31331159432714452, eta=11.658883083359672),
    dict(M_F=8.0, M_1=64.0, M_2=192.0, Lambda1=162.0, Lambda2=360.0, lnM1=107.53267022044001, R1=176.34255082313941, R2=502.23778894732989, xi1=376.6509313848874, xi2=1076.3730671104855, xi3=2.7486042134191204, eta=9.5794415416798359),
    dict(M_F=32.0, M_1=1024.0, M_2=2560.0, Lambda1=1512.0, Lambda2=4332.0, lnM1=1759.0866510841857, R1=2354.9805650341486, R2=6016.9580101519118, xi1=4796.8796270756969, xi2=12251.212262822323, xi3=9.7909873227232662, eta=13.738324625039508),
    dict(M_F=24.0, M_1=576.0, M_2=2304.0, Lambda1=918.0, Lambda2=3580.5870119269027, lnM1=1333.2798085613223, R1=2315.5104039610153, R2=9220.178561745193, xi1=4719.1396938265401, xi2=18792.832667108424, xi3=9.6568471183020626, eta=13.468903345359238),
    dict(M_F=4.0, M_1=16.0, M_2=176.0, Lambda1=63.0, Lambda2=696.0, lnM1=5371.6920781474653, R1=1.1347635499722499, R2=12.490429475916894, xi1=2.291681575241809, xi2=25.224558180104191, xi3=0.0026041978091499668, eta=0.98861038541995898),
]
