//! Full-conditional updates composing one Gibbs sweep.
//!
//! Update order within a sweep is fixed: censored-individual latents, then
//! cluster structure, then the concentration parameter, then globals. Each
//! global coordinate is slice sampled from its exact conditional; variance
//! and rate parameters move on the log scale with the Jacobian folded into
//! the target.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma as GammaDist, Normal as NormalDist};

use crate::error::{Error, Result};
use crate::model::{
    ar1_log_density, count_log_pmf, log_norm_constant_from_parts, FwShape, Globals, Hyperparams,
    RandomEffect,
};
use crate::sampler::chain::{MoveCounts, SamplerConfig};
use crate::sampler::slice::slice_sample;
use crate::sampler::state::{IndividualLatent, ModelState};
use crate::sampler::{sample_index_from_log_weights, PreparedData, PreparedIndividual};
use crate::stats::{dot, gamma_lpdf, inv_gamma_lpdf, lognormal_lpdf, normal_lpdf, truncated_lognormal_draw};

/// One full sweep over every block. Returns counts of the latent-history
/// moves for acceptance-rate reporting.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &PreparedData,
    hyper: &Hyperparams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<MoveCounts> {
    let counts = update_censored_latents(state, data, cfg, rng)?;
    update_random_effects(state, data, hyper, cfg, rng)?;
    update_concentration(state, hyper, rng)?;
    update_globals(state, data, hyper, cfg, rng)?;
    Ok(counts)
}

/// Normalizing-constant term for one individual; zero when it has no events.
fn lnc_for(
    ar: f64,
    gap_var: f64,
    n: u32,
    gap_mean: f64,
    surv_mean: f64,
    surv_var: f64,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let sh = FwShape::new(ar, gap_var, n)?;
    Ok(log_norm_constant_from_parts(&sh, gap_mean, surv_mean, surv_var))
}

/// Complete-data log likelihood of individual `i` under a candidate random
/// effect, dropping terms constant across atoms (the count pmf and the
/// ordering indicator). Non-finite moment sums count as zero likelihood.
pub(crate) fn individual_log_lik(
    ind: &PreparedIndividual,
    latent: &IndividualLatent,
    globals: &Globals,
    re: &RandomEffect,
) -> f64 {
    let gap_mean = dot(&ind.covariates, &globals.gap_coefs) + re.gap_level;
    let surv_mean = dot(&ind.covariates, &globals.surv_coefs) + re.surv_shift;
    let mut lp = ar1_log_density(
        &ind.obs_gaps,
        &latent.tail_gaps,
        gap_mean,
        re.gap_ar,
        globals.gap_var,
    );
    lp += lognormal_lpdf(latent.surv_time, surv_mean, globals.surv_var);
    if latent.n_events > 0 {
        match FwShape::new(re.gap_ar, globals.gap_var, latent.n_events) {
            Ok(sh) => {
                lp -= log_norm_constant_from_parts(&sh, gap_mean, surv_mean, globals.surv_var)
            }
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    lp
}

/// Reversible-jump and refresh moves for the latent histories of censored
/// individuals: a birth appends an event drawn from the one-step gap
/// predictive, a death removes the last imputed event, and a refresh
/// redraws the survival time exactly and slice-updates each imputed gap.
///
/// With the one-step predictive as proposal, the gap-density factors cancel
/// against the proposal density, leaving the count pmf ratio and the
/// normalizing-constant ratio.
pub fn update_censored_latents<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &PreparedData,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<MoveCounts> {
    let ModelState {
        globals,
        assignments,
        atoms,
        latents,
    } = state;
    let mut counts = MoveCounts::default();
    let gap_var = globals.gap_var;
    let surv_var = globals.surv_var;
    let gap_sd = gap_var.sqrt();

    for i in 0..data.len() {
        let ind = data.ind(i);
        if ind.survival_observed {
            continue;
        }
        let re = atoms[assignments[i]];
        let gap_mean = dot(&ind.covariates, &globals.gap_coefs) + re.gap_level;
        let surv_mean = dot(&ind.covariates, &globals.surv_coefs) + re.surv_shift;
        let latent = &mut latents[i];

        let u: f64 = rng.random();
        if u < cfg.birth_prob {
            counts.birth_proposed += 1;
            let n = latent.n_events;
            let prev = latent
                .tail_gaps
                .last()
                .copied()
                .or_else(|| ind.obs_gaps.last().copied());
            let pred_mean = match prev {
                Some(p) => gap_mean + re.gap_ar * (p - gap_mean),
                None => gap_mean,
            };
            let y_new = pred_mean + gap_sd * standard_normal(rng);
            let t_cur = ind.obs_last + exp_sum(&latent.tail_gaps);
            let t_new = t_cur + y_new.exp();
            let feasible = t_new <= latent.surv_time
                && (n > ind.obs_n || t_new > ind.censor_time);
            if feasible {
                let log_ratio = count_log_pmf(n + 1, globals.nb_shape, globals.nb_mean, cfg.max_events)
                    - count_log_pmf(n, globals.nb_shape, globals.nb_mean, cfg.max_events)
                    + lnc_for(re.gap_ar, gap_var, n, gap_mean, surv_mean, surv_var)?
                    - lnc_for(re.gap_ar, gap_var, n + 1, gap_mean, surv_mean, surv_var)?;
                if rng.random::<f64>().ln() < log_ratio {
                    latent.tail_gaps.push(y_new);
                    latent.n_events += 1;
                    counts.birth_accepted += 1;
                }
            }
        } else if u < cfg.birth_prob + cfg.death_prob {
            counts.death_proposed += 1;
            let n = latent.n_events;
            // Observed events cannot be removed.
            if n > ind.obs_n {
                let log_ratio = count_log_pmf(n - 1, globals.nb_shape, globals.nb_mean, cfg.max_events)
                    - count_log_pmf(n, globals.nb_shape, globals.nb_mean, cfg.max_events)
                    + lnc_for(re.gap_ar, gap_var, n, gap_mean, surv_mean, surv_var)?
                    - lnc_for(re.gap_ar, gap_var, n - 1, gap_mean, surv_mean, surv_var)?;
                if rng.random::<f64>().ln() < log_ratio {
                    latent.tail_gaps.pop();
                    latent.n_events -= 1;
                    counts.death_accepted += 1;
                }
            }
        } else {
            counts.refreshed += 1;
            // Exact draw of the survival time from its truncated-lognormal
            // conditional.
            let t_total = ind.obs_last + exp_sum(&latent.tail_gaps);
            let lower = ind.censor_time.max(t_total);
            latent.surv_time = truncated_lognormal_draw(surv_mean, surv_var, lower, rng);

            // Slice-update each imputed gap under the AR(1) band and the
            // ordering/censoring constraints.
            for j in 0..latent.tail_gaps.len() {
                let prefix = ind.obs_last
                    + latent.tail_gaps[..j].iter().map(|y| y.exp()).sum::<f64>();
                let suffix: f64 = latent.tail_gaps[j + 1..].iter().map(|y| y.exp()).sum();
                let prev = if j == 0 {
                    ind.obs_gaps.last().copied()
                } else {
                    Some(latent.tail_gaps[j - 1])
                };
                let mean_j = match prev {
                    Some(p) => gap_mean + re.gap_ar * (p - gap_mean),
                    None => gap_mean,
                };
                let next = latent.tail_gaps.get(j + 1).copied();
                let surv_time = latent.surv_time;
                let censor_time = ind.censor_time;
                let first_imputed = j == 0;
                let ar = re.gap_ar;
                let target = move |y: f64| {
                    let e = y.exp();
                    let t = prefix + e;
                    if t + suffix > surv_time {
                        return f64::NEG_INFINITY;
                    }
                    if first_imputed && t <= censor_time {
                        return f64::NEG_INFINITY;
                    }
                    let mut lp = normal_lpdf(y, mean_j, gap_var);
                    if let Some(ny) = next {
                        lp += normal_lpdf(ny, gap_mean + ar * (y - gap_mean), gap_var);
                    }
                    lp
                };
                latent.tail_gaps[j] = slice_sample(
                    target,
                    latent.tail_gaps[j],
                    cfg.slice_width * gap_sd,
                    cfg.slice_max_steps,
                    "tail_gap",
                    rng,
                )?;
            }
        }
    }
    Ok(counts)
}

/// Cluster-structure update via auxiliary components followed by a slice
/// refresh of each occupied atom from its conditional given its members.
pub fn update_random_effects<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &PreparedData,
    hyper: &Hyperparams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let ModelState {
        globals,
        assignments,
        atoms,
        latents,
    } = state;
    if data.is_empty() {
        return Ok(());
    }
    {
        let globals = &*globals;
        let latents = &*latents;
        neal8_sweep(
            assignments,
            atoms,
            globals.dp_mass,
            cfg.aux_components,
            hyper,
            |i, re| individual_log_lik(data.ind(i), &latents[i], globals, re),
            rng,
        )?;
    }

    let gap_var = globals.gap_var;
    let surv_var = globals.surv_var;
    let re_gap_sd = hyper.re_gap_var.sqrt();
    let re_surv_sd = hyper.re_surv_var.sqrt();

    for c in 0..atoms.len() {
        let members: Vec<usize> = (0..data.len()).filter(|&i| assignments[i] == c).collect();
        let xb: Vec<f64> = members
            .iter()
            .map(|&i| dot(&data.ind(i).covariates, &globals.gap_coefs))
            .collect();
        let xg: Vec<f64> = members
            .iter()
            .map(|&i| dot(&data.ind(i).covariates, &globals.surv_coefs))
            .collect();

        // Level of the gap mean.
        {
            let ar = atoms[c].gap_ar;
            let shift = atoms[c].surv_shift;
            let shapes = member_shapes(&members, latents, ar, gap_var)?;
            let target = |m1: f64| {
                let mut lp = normal_lpdf(m1, 0.0, hyper.re_gap_var);
                for (k, &i) in members.iter().enumerate() {
                    let ind = data.ind(i);
                    let latent = &latents[i];
                    if latent.n_events == 0 {
                        continue;
                    }
                    let mean = xb[k] + m1;
                    lp += ar1_log_density(&ind.obs_gaps, &latent.tail_gaps, mean, ar, gap_var);
                    let sh = shapes[k].as_ref().expect("events imply a shape");
                    lp -= log_norm_constant_from_parts(sh, mean, xg[k] + shift, surv_var);
                }
                lp
            };
            atoms[c].gap_level = slice_sample(
                target,
                atoms[c].gap_level,
                cfg.slice_width * re_gap_sd,
                cfg.slice_max_steps,
                "gap_level",
                rng,
            )?;
        }

        // AR coefficient; the moment shape depends on it, so it is rebuilt
        // per evaluation.
        {
            let level = atoms[c].gap_level;
            let shift = atoms[c].surv_shift;
            let target = |m2: f64| {
                let mut lp = normal_lpdf(m2, 0.0, hyper.re_gap_var);
                for (k, &i) in members.iter().enumerate() {
                    let ind = data.ind(i);
                    let latent = &latents[i];
                    if latent.n_events == 0 {
                        continue;
                    }
                    let mean = xb[k] + level;
                    lp += ar1_log_density(&ind.obs_gaps, &latent.tail_gaps, mean, m2, gap_var);
                    match FwShape::new(m2, gap_var, latent.n_events) {
                        Ok(sh) => {
                            lp -= log_norm_constant_from_parts(&sh, mean, xg[k] + shift, surv_var)
                        }
                        Err(_) => return f64::NEG_INFINITY,
                    }
                }
                lp
            };
            atoms[c].gap_ar = slice_sample(
                target,
                atoms[c].gap_ar,
                cfg.slice_width * re_gap_sd,
                cfg.slice_max_steps,
                "gap_ar",
                rng,
            )?;
        }

        // Survival shift; gap-side moments are now fixed, so cache them.
        {
            let ar = atoms[c].gap_ar;
            let level = atoms[c].gap_level;
            let shapes = member_shapes(&members, latents, ar, gap_var)?;
            let target = |d: f64| {
                let mut lp = normal_lpdf(d, 0.0, hyper.re_surv_var);
                for (k, &i) in members.iter().enumerate() {
                    let latent = &latents[i];
                    let surv_mean = xg[k] + d;
                    lp += lognormal_lpdf(latent.surv_time, surv_mean, surv_var);
                    if let Some(sh) = shapes[k].as_ref() {
                        lp -= log_norm_constant_from_parts(sh, xb[k] + level, surv_mean, surv_var);
                    }
                }
                lp
            };
            atoms[c].surv_shift = slice_sample(
                target,
                atoms[c].surv_shift,
                cfg.slice_width * re_surv_sd,
                cfg.slice_max_steps,
                "surv_shift",
                rng,
            )?;
        }
    }
    Ok(())
}

fn member_shapes(
    members: &[usize],
    latents: &[IndividualLatent],
    ar: f64,
    gap_var: f64,
) -> Result<Vec<Option<FwShape>>> {
    members
        .iter()
        .map(|&i| {
            let n = latents[i].n_events;
            if n == 0 {
                Ok(None)
            } else {
                FwShape::new(ar, gap_var, n).map(Some)
            }
        })
        .collect()
}

/// One pass of cluster reassignment with `aux` auxiliary atoms per
/// individual. `log_lik(i, re)` must return the log likelihood of
/// individual `i`'s current complete data under candidate effect `re`, up
/// to terms constant in `re`. Exposed so the clustering machinery can be
/// exercised with a flat likelihood, where it reduces to the Chinese
/// restaurant process prior.
pub fn neal8_sweep<R: Rng + ?Sized>(
    assignments: &mut Vec<usize>,
    atoms: &mut Vec<RandomEffect>,
    dp_mass: f64,
    aux: usize,
    hyper: &Hyperparams,
    mut log_lik: impl FnMut(usize, &RandomEffect) -> f64,
    rng: &mut R,
) -> Result<()> {
    if aux == 0 {
        return Err(Error::Parameter {
            name: "aux_components",
            reason: "need at least one auxiliary component".into(),
        });
    }
    let n_items = assignments.len();
    if n_items == 0 {
        return Ok(());
    }
    if atoms.is_empty() {
        return Err(Error::Parameter {
            name: "atoms",
            reason: "cluster update needs a starting atom".into(),
        });
    }
    let mut sizes = vec![0usize; atoms.len()];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    let level_dist = NormalDist::new(0.0, hyper.re_gap_var.sqrt()).expect("validated");
    let shift_dist = NormalDist::new(0.0, hyper.re_surv_var.sqrt()).expect("validated");
    let ln_mass_share = (dp_mass / aux as f64).ln();
    let mut weights: Vec<f64> = Vec::new();
    let mut aux_atoms: Vec<RandomEffect> = Vec::with_capacity(aux);

    for i in 0..n_items {
        let old = assignments[i];
        sizes[old] -= 1;
        let was_singleton = sizes[old] == 0;

        aux_atoms.clear();
        if was_singleton {
            // A singleton's own atom fills the first auxiliary slot.
            aux_atoms.push(atoms[old]);
        }
        while aux_atoms.len() < aux {
            aux_atoms.push(RandomEffect {
                gap_level: level_dist.sample(rng),
                gap_ar: level_dist.sample(rng),
                surv_shift: shift_dist.sample(rng),
            });
        }

        weights.clear();
        for (c, atom) in atoms.iter().enumerate() {
            if sizes[c] == 0 {
                weights.push(f64::NEG_INFINITY);
            } else {
                weights.push((sizes[c] as f64).ln() + log_lik(i, atom));
            }
        }
        for atom in &aux_atoms {
            weights.push(ln_mass_share + log_lik(i, atom));
        }

        let pick = sample_index_from_log_weights(&weights, rng)?;
        if pick < atoms.len() {
            assignments[i] = pick;
            sizes[pick] += 1;
            if was_singleton {
                remove_cluster(assignments, atoms, &mut sizes, old);
            }
        } else {
            let chosen = aux_atoms[pick - atoms.len()];
            if was_singleton {
                // Reuse the vacated slot; this also covers keeping the old
                // atom, which sits in auxiliary slot zero.
                atoms[old] = chosen;
                assignments[i] = old;
                sizes[old] = 1;
            } else {
                atoms.push(chosen);
                sizes.push(1);
                assignments[i] = atoms.len() - 1;
            }
        }
    }
    Ok(())
}

fn remove_cluster(
    assignments: &mut [usize],
    atoms: &mut Vec<RandomEffect>,
    sizes: &mut Vec<usize>,
    idx: usize,
) {
    debug_assert_eq!(sizes[idx], 0);
    atoms.remove(idx);
    sizes.remove(idx);
    for a in assignments.iter_mut() {
        debug_assert_ne!(*a, idx);
        if *a > idx {
            *a -= 1;
        }
    }
}

/// Concentration update through the usual beta augmentation: phi given the
/// mass, then the mass from a two-component gamma mixture. With no
/// individuals the conditional is the prior itself.
pub fn update_concentration<R: Rng + ?Sized>(
    state: &mut ModelState,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<()> {
    let l = state.latents.len();
    if l == 0 {
        let prior = GammaDist::new(hyper.dp_mass_shape, 1.0 / hyper.dp_mass_rate)
            .map_err(|e| Error::Parameter {
                name: "dp_mass",
                reason: e.to_string(),
            })?;
        state.globals.dp_mass = prior.sample(rng);
        return Ok(());
    }
    let k = state.atoms.len() as f64;
    let m = state.globals.dp_mass;
    let phi = Beta::new(m + 1.0, l as f64)
        .map_err(|e| Error::Parameter {
            name: "dp_mass",
            reason: e.to_string(),
        })?
        .sample(rng);
    let rate = hyper.dp_mass_rate - phi.ln();
    let odds = (hyper.dp_mass_shape + k - 1.0) / (l as f64 * rate);
    let shape = if rng.random::<f64>() * (1.0 + odds) < odds {
        hyper.dp_mass_shape + k
    } else {
        hyper.dp_mass_shape + k - 1.0
    };
    let draw = GammaDist::new(shape, 1.0 / rate).map_err(|e| Error::Parameter {
        name: "dp_mass",
        reason: e.to_string(),
    })?;
    state.globals.dp_mass = draw.sample(rng);
    Ok(())
}

/// Slice updates for every global parameter, each from its exact
/// conditional with terms that do not involve the parameter dropped.
pub fn update_globals<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &PreparedData,
    hyper: &Hyperparams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let ModelState {
        globals,
        assignments,
        atoms,
        latents,
    } = state;
    let l = data.len();
    let q = data.covariate_dim();
    let counts: Vec<u32> = latents.iter().map(|lat| lat.n_events).collect();
    let ln_surv: Vec<f64> = latents.iter().map(|lat| lat.surv_time.ln()).collect();

    // Gap-side moment shapes under the current gap variance.
    let mut shapes = all_shapes(&counts, assignments, atoms, globals.gap_var)?;

    // Gap coefficients: the survival means are fixed through this block.
    let surv_means: Vec<f64> = (0..l)
        .map(|i| dot(&data.ind(i).covariates, &globals.surv_coefs) + atoms[assignments[i]].surv_shift)
        .collect();
    let coef_width = cfg.slice_width * hyper.gap_coef_var.sqrt();
    for kk in 0..q {
        let bases: Vec<f64> = (0..l)
            .map(|i| {
                let ind = data.ind(i);
                dot(&ind.covariates, &globals.gap_coefs) - ind.covariates[kk] * globals.gap_coefs[kk]
                    + atoms[assignments[i]].gap_level
            })
            .collect();
        let gap_var = globals.gap_var;
        let surv_var = globals.surv_var;
        let target = |b: f64| {
            let mut lp = normal_lpdf(b, 0.0, hyper.gap_coef_var);
            for i in 0..l {
                if counts[i] == 0 {
                    continue;
                }
                let ind = data.ind(i);
                let mean = bases[i] + ind.covariates[kk] * b;
                lp += ar1_log_density(
                    &ind.obs_gaps,
                    &latents[i].tail_gaps,
                    mean,
                    atoms[assignments[i]].gap_ar,
                    gap_var,
                );
                let sh = shapes[i].as_ref().expect("events imply a shape");
                lp -= log_norm_constant_from_parts(sh, mean, surv_means[i], surv_var);
            }
            lp
        };
        globals.gap_coefs[kk] = slice_sample(
            target,
            globals.gap_coefs[kk],
            coef_width,
            cfg.slice_max_steps,
            "gap_coefs",
            rng,
        )?;
    }

    // Survival coefficients: gap means now fixed.
    let gap_means: Vec<f64> = (0..l)
        .map(|i| dot(&data.ind(i).covariates, &globals.gap_coefs) + atoms[assignments[i]].gap_level)
        .collect();
    let surv_coef_width = cfg.slice_width * hyper.surv_coef_var.sqrt();
    for kk in 0..q {
        let bases: Vec<f64> = (0..l)
            .map(|i| {
                let ind = data.ind(i);
                dot(&ind.covariates, &globals.surv_coefs)
                    - ind.covariates[kk] * globals.surv_coefs[kk]
                    + atoms[assignments[i]].surv_shift
            })
            .collect();
        let surv_var = globals.surv_var;
        let target = |g: f64| {
            let mut lp = normal_lpdf(g, 0.0, hyper.surv_coef_var);
            for i in 0..l {
                let mean = bases[i] + data.ind(i).covariates[kk] * g;
                lp += normal_lpdf(ln_surv[i], mean, surv_var);
                if let Some(sh) = shapes[i].as_ref() {
                    lp -= log_norm_constant_from_parts(sh, gap_means[i], mean, surv_var);
                }
            }
            lp
        };
        globals.surv_coefs[kk] = slice_sample(
            target,
            globals.surv_coefs[kk],
            surv_coef_width,
            cfg.slice_max_steps,
            "surv_coefs",
            rng,
        )?;
    }

    // Gap variance, on the log scale.
    let surv_means: Vec<f64> = (0..l)
        .map(|i| dot(&data.ind(i).covariates, &globals.surv_coefs) + atoms[assignments[i]].surv_shift)
        .collect();
    {
        let surv_var = globals.surv_var;
        let target = |u: f64| {
            let v = u.exp();
            if !v.is_finite() || v <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let mut lp = inv_gamma_lpdf(v, 0.5 * hyper.gap_var_df, 0.5 * hyper.gap_var_df * hyper.gap_var_scale)
                + u;
            for i in 0..l {
                let ind = data.ind(i);
                let ar = atoms[assignments[i]].gap_ar;
                lp += ar1_log_density(&ind.obs_gaps, &latents[i].tail_gaps, gap_means[i], ar, v);
                if counts[i] > 0 {
                    match FwShape::new(ar, v, counts[i]) {
                        Ok(sh) => {
                            lp -= log_norm_constant_from_parts(&sh, gap_means[i], surv_means[i], surv_var)
                        }
                        Err(_) => return f64::NEG_INFINITY,
                    }
                }
            }
            lp
        };
        let u = slice_sample(
            target,
            globals.gap_var.ln(),
            cfg.slice_width,
            cfg.slice_max_steps,
            "gap_var",
            rng,
        )?;
        globals.gap_var = u.exp();
    }
    shapes = all_shapes(&counts, assignments, atoms, globals.gap_var)?;

    // Survival variance, on the log scale; moment shapes stay fixed.
    {
        let target = |u: f64| {
            let v = u.exp();
            if !v.is_finite() || v <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let mut lp = inv_gamma_lpdf(
                v,
                0.5 * hyper.surv_var_df,
                0.5 * hyper.surv_var_df * hyper.surv_var_scale,
            ) + u;
            for i in 0..l {
                lp += normal_lpdf(ln_surv[i], surv_means[i], v);
                if let Some(sh) = shapes[i].as_ref() {
                    lp -= log_norm_constant_from_parts(sh, gap_means[i], surv_means[i], v);
                }
            }
            lp
        };
        let u = slice_sample(
            target,
            globals.surv_var.ln(),
            cfg.slice_width,
            cfg.slice_max_steps,
            "surv_var",
            rng,
        )?;
        globals.surv_var = u.exp();
    }

    // Count shape and mean, on the log scale. Only the per-count tallies
    // matter, not which individual produced them.
    let mut count_tally: BTreeMap<u32, u64> = BTreeMap::new();
    for &n in &counts {
        *count_tally.entry(n).or_insert(0) += 1;
    }
    {
        let nb_mean = globals.nb_mean;
        let target = |u: f64| {
            let r = u.exp();
            if !r.is_finite() || r <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let mut lp = gamma_lpdf(r, hyper.nb_shape_prior_shape, hyper.nb_shape_prior_rate) + u;
            for (&n, &cnt) in &count_tally {
                lp += cnt as f64 * count_log_pmf(n, r, nb_mean, cfg.max_events);
            }
            lp
        };
        let u = slice_sample(
            target,
            globals.nb_shape.ln(),
            cfg.slice_width,
            cfg.slice_max_steps,
            "nb_shape",
            rng,
        )?;
        globals.nb_shape = u.exp();
    }
    {
        let nb_shape = globals.nb_shape;
        let total_count: f64 = counts.iter().map(|&n| n as f64).sum();
        let l_f = l as f64;
        let target = |u: f64| {
            let lam = u.exp();
            if !lam.is_finite() || lam <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let mut lp = gamma_lpdf(lam, hyper.nb_mean_prior_shape, hyper.nb_mean_prior_rate) + u;
            match cfg.max_events {
                // Without a cap the count terms collapse to two sums.
                None => {
                    lp += l_f * nb_shape * (nb_shape / (nb_shape + lam)).ln()
                        + total_count * (lam / (nb_shape + lam)).ln();
                }
                Some(_) => {
                    for (&n, &cnt) in &count_tally {
                        lp += cnt as f64 * count_log_pmf(n, nb_shape, lam, cfg.max_events);
                    }
                }
            }
            lp
        };
        let u = slice_sample(
            target,
            globals.nb_mean.ln(),
            cfg.slice_width,
            cfg.slice_max_steps,
            "nb_mean",
            rng,
        )?;
        globals.nb_mean = u.exp();
    }
    Ok(())
}

fn all_shapes(
    counts: &[u32],
    assignments: &[usize],
    atoms: &[RandomEffect],
    gap_var: f64,
) -> Result<Vec<Option<FwShape>>> {
    counts
        .iter()
        .zip(assignments)
        .map(|(&n, &a)| {
            if n == 0 {
                Ok(None)
            } else {
                FwShape::new(atoms[a].gap_ar, gap_var, n).map(Some)
            }
        })
        .collect()
}

fn exp_sum(gaps: &[f64]) -> f64 {
    gaps.iter().map(|y| y.exp()).sum()
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    NormalDist::new(0.0, 1.0).expect("unit normal").sample(rng)
}
