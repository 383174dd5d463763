//! Dormand–Prince 8(5,3) integrator with 7th-order dense output.
//!
//! States are fixed-size real arrays; complex systems are packed as
//! interleaved real/imaginary parts by the caller.

use crate::error::{Error, Result};

/// Tolerances and limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Output nodes per 2π; must be a positive multiple of 4.
    pub nodes_per_period: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-13,
            atol: 1e-13,
            max_steps: 1_000_000,
            nodes_per_period: 2048,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        if self.nodes_per_period == 0 || self.nodes_per_period % 4 != 0 {
            return Err(Error::Domain(format!(
                "nodes_per_period must be a positive multiple of 4, got {}",
                self.nodes_per_period
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Domain("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Run statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;
const EXPO1: f64 = 1.0 / 8.0;

/// Integrates `y' = f(x, y)` from `x0` and samples the solution at `nodes`
/// (ascending, all `>= x0`) through the continuous extension.
pub fn solve_dense<const N: usize, F>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    nodes: &[f64],
    control: &StepControl,
) -> Result<(Vec<[f64; N]>, Stats)>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    let mut out = Vec::with_capacity(nodes.len());
    let mut stats = Stats::default();
    if nodes.is_empty() {
        return Ok((out, stats));
    }
    if nodes.windows(2).any(|w| w[1] < w[0]) || nodes[0] < x0 {
        return Err(Error::Precondition(
            "output nodes must be ascending and not precede x0".into(),
        ));
    }
    let x_end = *nodes.last().unwrap();
    let mut next = 0;
    while next < nodes.len() && nodes[next] == x0 {
        out.push(y0);
        next += 1;
    }
    if next == nodes.len() {
        return Ok((out, stats));
    }

    let rtol = control.rtol;
    let atol = control.atol;
    let h_max = x_end - x0;

    let mut x = x0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    f(x, &y, &mut k1);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, x, &y, &k1, h_max, rtol, atol);
    stats.evaluations += 1;
    let mut last_rejected = false;

    let mut k = [[0.0; N]; 16];
    let mut stage = [0.0; N];

    loop {
        if stats.accepted + stats.rejected >= control.max_steps {
            return Err(Error::Integration {
                x,
                reason: format!("step budget of {} exhausted", control.max_steps),
            });
        }
        let last = x + 1.01 * h >= x_end;
        if last {
            h = x_end - x;
        }
        if h.abs() <= 10.0 * f64::EPSILON * x.abs().max(1.0) {
            return Err(Error::Integration {
                x,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        k[0] = k1;
        macro_rules! stage {
            ($idx:expr, $c:expr, [$(($a:expr, $j:expr)),*]) => {{
                for i in 0..N {
                    stage[i] = y[i] + h * (0.0 $(+ $a * k[$j][i])*);
                }
                let (_, tail) = k.split_at_mut($idx);
                f(x + $c * h, &stage, &mut tail[0]);
            }};
        }
        stage!(1, C2, [(A21, 0)]);
        stage!(2, C3, [(A31, 0), (A32, 1)]);
        stage!(3, C4, [(A41, 0), (A43, 2)]);
        stage!(4, C5, [(A51, 0), (A53, 2), (A54, 3)]);
        stage!(5, C6, [(A61, 0), (A64, 3), (A65, 4)]);
        stage!(6, C7, [(A71, 0), (A74, 3), (A75, 4), (A76, 5)]);
        stage!(7, C8, [(A81, 0), (A84, 3), (A85, 4), (A86, 5), (A87, 6)]);
        stage!(8, C9, [(A91, 0), (A94, 3), (A95, 4), (A96, 5), (A97, 6), (A98, 7)]);
        stage!(9, C10, [(A101, 0), (A104, 3), (A105, 4), (A106, 5), (A107, 6), (A108, 7), (A109, 8)]);
        stage!(10, C11, [(A111, 0), (A114, 3), (A115, 4), (A116, 5), (A117, 6), (A118, 7), (A119, 8), (A1110, 9)]);
        stage!(11, 1.0, [(A121, 0), (A124, 3), (A125, 4), (A126, 5), (A127, 6), (A128, 7), (A129, 8), (A1210, 9), (A1211, 10)]);
        stats.evaluations += 11;

        let mut incr = [0.0; N];
        let mut y_new = [0.0; N];
        for i in 0..N {
            incr[i] = B1 * k[0][i]
                + B6 * k[5][i]
                + B7 * k[6][i]
                + B8 * k[7][i]
                + B9 * k[8][i]
                + B10 * k[9][i]
                + B11 * k[10][i]
                + B12 * k[11][i];
            y_new[i] = y[i] + h * incr[i];
        }

        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..N {
            let sk = atol + rtol * y[i].abs().max(y_new[i].abs());
            let e2 = incr[i] - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i];
            err2 += (e2 / sk) * (e2 / sk);
            let e = ER1 * k[0][i]
                + ER6 * k[5][i]
                + ER7 * k[6][i]
                + ER8 * k[7][i]
                + ER9 * k[8][i]
                + ER10 * k[9][i]
                + ER11 * k[10][i]
                + ER12 * k[11][i];
            err += (e / sk) * (e / sk);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (N as f64 * deno)).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration {
                x,
                reason: "non-finite error estimate".into(),
            });
        }

        let fac11 = err.powf(EXPO1);
        let fac = (fac11 / SAFE).clamp(1.0 / FAC2, 1.0 / FAC1);
        let mut h_new = h / fac;

        if err <= 1.0 {
            stats.accepted += 1;
            let x_new = x + h;
            // k[12] = f at the new point (first stage of the next step).
            {
                let (_, tail) = k.split_at_mut(12);
                f(x_new, &y_new, &mut tail[0]);
            }
            stats.evaluations += 1;

            let dense_needed = next < nodes.len() && nodes[next] <= x_new;
            if dense_needed {
                stage!(13, C14, [(A141, 0), (A147, 6), (A148, 7), (A149, 8), (A1410, 9), (A1411, 10), (A1412, 11), (A1413, 12)]);
                stage!(14, C15, [(A151, 0), (A156, 5), (A157, 6), (A158, 7), (A1511, 10), (A1512, 11), (A1513, 12), (A1514, 13)]);
                stage!(15, C16, [(A161, 0), (A166, 5), (A167, 6), (A168, 7), (A169, 8), (A1613, 12), (A1614, 13), (A1615, 14)]);
                stats.evaluations += 3;
                let cont = dense_coefficients(&y, &y_new, &k, h);
                while next < nodes.len() && (nodes[next] <= x_new || (last && next + 1 == nodes.len())) {
                    let s = if next + 1 == nodes.len() && last {
                        1.0
                    } else {
                        (nodes[next] - x) / h
                    };
                    out.push(if s == 1.0 { y_new } else { interpolate(&cont, s) });
                    next += 1;
                }
            }

            k1 = k[12];
            y = y_new;
            x = x_new;
            if last || next >= nodes.len() {
                break;
            }
            if h_new.abs() > h_max {
                h_new = h_max;
            }
            if last_rejected {
                h_new = h_new.abs().min(h.abs());
            }
            last_rejected = false;
        } else {
            h_new = h / (fac11 / SAFE).min(1.0 / FAC1);
            last_rejected = true;
            stats.rejected += 1;
        }
        h = h_new;
    }
    while out.len() < nodes.len() {
        out.push(y);
    }
    Ok((out, stats))
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    x: f64,
    y: &[f64; N],
    f0: &[f64; N],
    h_max: f64,
    rtol: f64,
    atol: f64,
) -> f64
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = atol + rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(h_max);
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y[i] + h * f0[i];
    }
    let mut f1 = [0.0; N];
    f(x + h, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = atol + rtol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h.abs() * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / 8.0)
    };
    (100.0 * h.abs()).min(h1).min(h_max)
}

fn dense_coefficients<const N: usize>(
    y: &[f64; N],
    y_new: &[f64; N],
    k: &[[f64; N]; 16],
    h: f64,
) -> [[f64; N]; 8] {
    let mut c = [[0.0; N]; 8];
    for i in 0..N {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        c[0][i] = y[i];
        c[1][i] = ydiff;
        c[2][i] = bspl;
        c[3][i] = ydiff - h * k[12][i] - bspl;
        let s = |d: [f64; 12]| {
            d[0] * k[0][i]
                + d[1] * k[5][i]
                + d[2] * k[6][i]
                + d[3] * k[7][i]
                + d[4] * k[8][i]
                + d[5] * k[9][i]
                + d[6] * k[10][i]
                + d[7] * k[11][i]
                + d[8] * k[12][i]
                + d[9] * k[13][i]
                + d[10] * k[14][i]
                + d[11] * k[15][i]
        };
        c[4][i] = h * s([D41, D46, D47, D48, D49, D410, D411, D412, D413, D414, D415, D416]);
        c[5][i] = h * s([D51, D56, D57, D58, D59, D510, D511, D512, D513, D514, D515, D516]);
        c[6][i] = h * s([D61, D66, D67, D68, D69, D610, D611, D612, D613, D614, D615, D616]);
        c[7][i] = h * s([D71, D76, D77, D78, D79, D710, D711, D712, D713, D714, D715, D716]);
    }
    c
}

fn interpolate<const N: usize>(c: &[[f64; N]; 8], s: f64) -> [f64; N] {
    let s1 = 1.0 - s;
    let mut out = [0.0; N];
    for i in 0..N {
        let conpar = c[4][i] + s * (c[5][i] + s1 * (c[6][i] + s * c[7][i]));
        out[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * conpar)));
    }
    out
}


// Dormand–Prince 8(5,3) coefficients.
const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;
const A141: f64 = 5.61675022830479523392909219681E-2;
const A147: f64 = 2.53500210216624811088794765333E-1;
const A148: f64 = -2.46239037470802489917441475441E-1;
const A149: f64 = -1.24191423263816360469010140626E-1;
const A1410: f64 = 1.5329179827876569731206322685E-1;
const A1411: f64 = 8.20105229563468988491666602057E-3;
const A1412: f64 = 7.56789766054569976138603589584E-3;
const A1413: f64 = -8.298E-3;
const A151: f64 = 3.18346481635021405060768473261E-2;
const A156: f64 = 2.83009096723667755288322961402E-2;
const A157: f64 = 5.35419883074385676223797384372E-2;
const A158: f64 = -5.49237485713909884646569340306E-2;
const A1511: f64 = -1.08347328697249322858509316994E-4;
const A1512: f64 = 3.82571090835658412954920192323E-4;
const A1513: f64 = -3.40465008687404560802977114492E-4;
const A1514: f64 = 1.41312443674632500278074618366E-1;
const A161: f64 = -4.28896301583791923408573538692E-1;
const A166: f64 = -4.69762141536116384314449447206E0;
const A167: f64 = 7.68342119606259904184240953878E0;
const A168: f64 = 4.06898981839711007970213554331E0;
const A169: f64 = 3.56727187455281109270669543021E-1;
const A1613: f64 = -1.39902416515901462129418009734E-3;
const A1614: f64 = 2.9475147891527723389556272149E0;
const A1615: f64 = -9.15095847217987001081870187138E0;
const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;
const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;
const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;
const C14: f64 = 0.1E+00;
const C15: f64 = 0.2E+00;
const C16: f64 = 0.777777777777777777777777777778E+00;
const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
const D41: f64 = -0.84289382761090128651353491142E+01;
const D46: f64 = 0.56671495351937776962531783590E+00;
const D47: f64 = -0.30689499459498916912797304727E+01;
const D48: f64 = 0.23846676565120698287728149680E+01;
const D49: f64 = 0.21170345824450282767155149946E+01;
const D410: f64 = -0.87139158377797299206789907490E+00;
const D411: f64 = 0.22404374302607882758541771650E+01;
const D412: f64 = 0.63157877876946881815570249290E+00;
const D413: f64 = -0.88990336451333310820698117400E-01;
const D414: f64 = 0.18148505520854727256656404962E+02;
const D415: f64 = -0.91946323924783554000451984436E+01;
const D416: f64 = -0.44360363875948939664310572000E+01;
const D51: f64 = 0.10427508642579134603413151009E+02;
const D56: f64 = 0.24228349177525818288430175319E+03;
const D57: f64 = 0.16520045171727028198505394887E+03;
const D58: f64 = -0.37454675472269020279518312152E+03;
const D59: f64 = -0.22113666853125306036270938578E+02;
const D510: f64 = 0.77334326684722638389603898808E+01;
const D511: f64 = -0.30674084731089398182061213626E+02;
const D512: f64 = -0.93321305264302278729567221706E+01;
const D513: f64 = 0.15697238121770843886131091075E+02;
const D514: f64 = -0.31139403219565177677282850411E+02;
const D515: f64 = -0.93529243588444783865713862664E+01;
const D516: f64 = 0.35816841486394083752465898540E+02;
const D61: f64 = 0.19985053242002433820987653617E+02;
const D66: f64 = -0.38703730874935176555105901742E+03;
const D67: f64 = -0.18917813819516756882830838328E+03;
const D68: f64 = 0.52780815920542364900561016686E+03;
const D69: f64 = -0.11573902539959630126141871134E+02;
const D610: f64 = 0.68812326946963000169666922661E+01;
const D611: f64 = -0.10006050966910838403183860980E+01;
const D612: f64 = 0.77771377980534432092869265740E+00;
const D613: f64 = -0.27782057523535084065932004339E+01;
const D614: f64 = -0.60196695231264120758267380846E+02;
const D615: f64 = 0.84320405506677161018159903784E+02;
const D616: f64 = 0.11992291136182789328035130030E+02;
const D71: f64 = -0.25693933462703749003312586129E+02;
const D76: f64 = -0.15418974869023643374053993627E+03;
const D77: f64 = -0.23152937917604549567536039109E+03;
const D78: f64 = 0.35763911791061412378285349910E+03;
const D79: f64 = 0.93405324183624310003907691704E+02;
const D710: f64 = -0.37458323136451633156875139351E+02;
const D711: f64 = 0.10409964950896230045147246184E+03;
const D712: f64 = 0.29840293426660503123344363579E+02;
const D713: f64 = -0.43533456590011143754432175058E+02;
const D714: f64 = 0.96324553959188282948394950600E+02;
const D715: f64 = -0.39177261675615439165231486172E+02;
const D716: f64 = -0.14972683625798562581422125276E+03;
