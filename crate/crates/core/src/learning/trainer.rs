use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::abstraction::{propose_abstraction, AbstractionLabel, AbstractionParams};
use super::agent::{matching_policy, policy_context, sample_action, Agent};
use super::config::{Scheme, TrainerConfig, Updater};
use super::mutation::{neighborhood, policy_indices, CandidateEdit, MutationScope};
use super::window::{model_observed, policy_observed, ChannelKind, ChannelSpec, RuleColumns, WindowModel};
use crate::airis::Airis;
use crate::beliefs::{combined_reward, softmax, HistoryWindow, RewardWeights, RuleParams, Transition};
use crate::envs::{episode_seed, Env, EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::metagraph::{
    canonical_tree, rule_distance, Origin, Pattern, RewriteRule, RuleId, RuleRole, Term, WorldState, ACTION,
};
use crate::transport::{
    default_ridge, graph_from_distances, jko_step, laplacian, metric_at, natural_step, softmax_jacobian, Loss,
    RuleGraph,
};

pub const METRICS_HEADER: &str = "iter,e_t,r_int,r_ep,r_env,r_t,n_rules,updater";

/// One line of the metrics series.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub iter: u64,
    /// Windowed prediction error after the latest update.
    pub e_t: f64,
    pub r_int: f64,
    pub r_ep: f64,
    pub r_env: f64,
    pub r_t: f64,
    pub n_rules: usize,
    pub updater: Updater,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.9},{:.9},{:.9},{:.6},{:.9},{},{}",
            self.iter,
            self.e_t,
            self.r_int,
            self.r_ep,
            self.r_env,
            self.r_t,
            self.n_rules,
            self.updater.name()
        )
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// What an update did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateReport {
    pub f_before: f64,
    pub f_after: f64,
    pub edits: usize,
    pub stepped: bool,
    pub pruned: usize,
    pub added: usize,
}

/// Everything that evolves during training.
#[derive(Clone, Debug)]
pub struct TrainerState {
    pub rules: Vec<RewriteRule>,
    pub params: RuleParams,
    pub history: HistoryWindow,
    pub metrics: Vec<MetricsRow>,
    pub t: u64,
    pub next_rule_id: u64,
    pub labels: Vec<AbstractionLabel>,
    pub airis: Option<Airis>,
    pub rng: ChaCha8Rng,
    pub episode: u64,
    pub updates: usize,
    pub skipped_updates: usize,
    low_counts: BTreeMap<RuleId, usize>,
    /// Causal rule id → the rewrite rule it was lowered to, `None` once
    /// that rule has been pruned.
    lowered: BTreeMap<u64, Option<RuleId>>,
    distances: BTreeMap<(RuleId, RuleId), f64>,
    obs: WorldState,
    last_f: f64,
    last_surprise: f64,
}

impl TrainerState {
    pub fn probs(&self) -> Vec<f64> {
        softmax(&self.params.logits)
    }

    pub fn observation(&self) -> &WorldState {
        &self.obs
    }

    /// Rewrite rules lowered from causal rules, by causal id.
    pub fn lowered(&self) -> impl Iterator<Item = (u64, RuleId)> + '_ {
        self.lowered.iter().filter_map(|(c, r)| r.map(|r| (*c, r)))
    }

    fn push_rule(&mut self, rule: RewriteRule, logit: f64) -> RuleId {
        let id = RuleId(self.next_rule_id);
        self.next_rule_id += 1;
        self.rules.push(rule.with_id(id));
        self.params.logits.push(logit);
        id
    }

    fn remove_rule(&mut self, i: usize) {
        let id = self.rules.remove(i).id;
        self.params.logits.remove(i);
        self.low_counts.remove(&id);
        self.distances.retain(|k, _| k.0 != id && k.1 != id);
        for v in self.lowered.values_mut() {
            if *v == Some(id) {
                *v = None;
            }
        }
    }

    fn mean_logit(&self) -> f64 {
        if self.params.is_empty() {
            0.0
        } else {
            self.params.logits.iter().sum::<f64>() / self.params.len() as f64
        }
    }

    /// The logit giving a new rule the current mean probability.
    fn entry_logit(&self) -> f64 {
        let n = self.params.len().max(1) as f64;
        log_sum_exp(&self.params.logits) - n.ln()
    }

    fn distance(&mut self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.rules[i].id, self.rules[j].id);
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(d) = self.distances.get(&key) {
            return *d;
        }
        let d = rule_distance(&self.rules[i], &self.rules[j]);
        self.distances.insert(key, d);
        d
    }
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return 0.0;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn recenter(logits: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(logits);
    logits.iter().map(|x| x - z).collect()
}

/// Unconditional `=> (Action a)`.
pub fn generic_rule(action: &str) -> RewriteRule {
    RewriteRule::new(
        RuleId(0),
        Pattern::new(vec![]),
        Pattern::new(vec![Term::fact(ACTION, &[action])]),
        Origin::Seed,
    )
    .expect("ground rule")
}

/// `=> (Event None)`, the world-model prior that nothing happens.
pub fn null_model_rule() -> RewriteRule {
    RewriteRule::new(
        RuleId(0),
        Pattern::new(vec![]),
        Pattern::new(vec![super::window::null_event()]),
        Origin::Seed,
    )
    .expect("ground rule")
}

fn f_value(model: &WindowModel, cols: &[RuleColumns], logits: &[f64]) -> f64 {
    model.objective(cols).value(&softmax(logits)).unwrap_or(f64::INFINITY)
}

fn grad_xi(model: &WindowModel, cols: &[RuleColumns], logits: &[f64]) -> Result<Vec<f64>> {
    let p = softmax(logits);
    let gp = model.objective(cols).grad_p(&p)?;
    let j = softmax_jacobian(&p);
    Ok((0..p.len())
        .map(|i| (0..p.len()).map(|k| j[(k, i)] * gp[k]).sum())
        .collect())
}

/// The training loop for one environment.
#[derive(Clone, Debug)]
pub struct Trainer {
    cfg: TrainerConfig,
    env: Env,
    actions: Vec<&'static str>,
    pub state: TrainerState,
}

impl Trainer {
    pub fn new(cfg: TrainerConfig, env_cfg: &EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let mut env = env_cfg.build()?;
        let actions = env.actions().to_vec();
        let obs = env.reset(episode_seed(cfg.seed, 0));
        let airis = cfg
            .updater
            .uses_airis()
            .then(|| Airis::new(cfg.airis.clone(), env.move_actions()));
        let mut state = TrainerState {
            rules: Vec::new(),
            params: RuleParams::uniform(0),
            history: HistoryWindow::new(cfg.window),
            metrics: Vec::new(),
            t: 0,
            next_rule_id: 0,
            labels: Vec::new(),
            airis,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            episode: 0,
            updates: 0,
            skipped_updates: 0,
            low_counts: BTreeMap::new(),
            lowered: BTreeMap::new(),
            distances: BTreeMap::new(),
            obs,
            last_f: 0.0,
            last_surprise: 0.0,
        };
        if cfg.initial_rules.is_empty() {
            for a in &actions {
                state.push_rule(generic_rule(a), 0.0);
            }
        } else {
            for src in &cfg.initial_rules {
                state.push_rule(RewriteRule::parse(0, src, Origin::Seed)?, 0.0);
            }
        }
        if state.airis.is_some() {
            state.push_rule(null_model_rule(), 0.0);
        }
        Ok(Trainer {
            cfg,
            env,
            actions,
            state,
        })
    }

    /// Resumes from a saved population.
    pub fn with_population(mut self, rules: Vec<RewriteRule>, params: RuleParams, t: u64) -> Result<Self> {
        if rules.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: rules.len(),
                got: params.len(),
            });
        }
        self.state.next_rule_id = rules.iter().map(|r| r.id.0 + 1).max().unwrap_or(0);
        self.state.rules = rules;
        self.state.params = params;
        self.state.t = t;
        Ok(self)
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    /// The current population acting greedily.
    pub fn agent(&self) -> Agent {
        Agent::new(
            self.state.rules.clone(),
            &self.state.params.logits,
            self.cfg.condition_labels.clone(),
            self.state.airis.clone(),
        )
    }

    /// Record weights: `base + κ·(return − mean return of the same observed
    /// state)`, floored at `min_weight`. Actions that did better than usual
    /// from where they were taken count for more.
    fn record_weights(&self) -> Vec<f64> {
        let key = |tr: &Transition| {
            if self.cfg.condition_labels.is_empty() {
                tr.state.clone()
            } else {
                tr.state.project(&self.cfg.condition_labels)
            }
        };
        let mut sums: BTreeMap<WorldState, (f64, usize)> = BTreeMap::new();
        for tr in self.state.history.iter() {
            let e = sums.entry(key(tr)).or_insert((0.0, 0));
            e.0 += tr.ret;
            e.1 += 1;
        }
        self.state
            .history
            .iter()
            .map(|tr| {
                let (s, n) = sums[&key(tr)];
                let adv = tr.ret - s / n as f64;
                (self.cfg.base_weight + self.cfg.reward_scale * adv).max(self.cfg.min_weight)
            })
            .collect()
    }

    /// Groups the history window by context under the current rules.
    pub fn window_model(&self) -> WindowModel {
        let rules = &self.state.rules;
        let labels = &self.cfg.condition_labels;
        let pctx = |tr: &Transition| Some(policy_context(rules, labels, &tr.state));
        let mctx = |tr: &Transition| tr.context.clone();
        let mut specs = vec![ChannelSpec {
            kind: ChannelKind::Policy,
            epsilon: 0.0,
            weighted: true,
            context: &pctx,
            observed: &policy_observed,
        }];
        if self.state.airis.is_some() {
            specs.push(ChannelSpec {
                kind: ChannelKind::Model,
                epsilon: self.cfg.model_epsilon,
                weighted: false,
                context: &mctx,
                observed: &model_observed,
            });
        }
        let records: Vec<(&Transition, f64)> = self.state.history.iter().zip(self.record_weights()).collect();
        WindowModel::build(records.iter().copied(), &specs, self.cfg.smoothing)
    }

    fn all_columns(&self, model: &mut WindowModel) -> Vec<RuleColumns> {
        self.state.rules.iter().map(|r| model.columns(r)).collect()
    }

    /// Windowed prediction error of the current population.
    pub fn window_error(&self) -> Result<f64> {
        let mut model = self.window_model();
        let cols = self.all_columns(&mut model);
        model.objective(&cols).value(&self.state.probs())
    }

    fn inject_generic(&mut self, action: &str) {
        let rule = generic_rule(action);
        if !self.state.rules.iter().any(|r| r.same_structure(&rule)) {
            let logit = self.state.mean_logit();
            self.state.push_rule(rule, logit);
        }
    }

    fn choose_action(&mut self, obs: &WorldState) -> String {
        if let Some(a) = self.state.airis.as_ref().and_then(Airis::advise) {
            return a;
        }
        let ctx = policy_context(&self.state.rules, &self.cfg.condition_labels, obs);
        let probs = self.state.probs();
        if let Some((_, a)) = sample_action(&self.state.rules, &probs, &ctx, &mut self.state.rng) {
            return a;
        }
        // no rule speaks for this state
        for a in self.actions.clone() {
            self.inject_generic(a);
        }
        let probs = self.state.probs();
        sample_action(&self.state.rules, &probs, &ctx, &mut self.state.rng)
            .map(|(_, a)| a)
            .expect("generic rules match every state")
    }

    /// Makes sure some matching rule proposes `action` in `obs`.
    fn ensure_producible(&mut self, obs: &WorldState, action: &str) {
        let ctx = policy_context(&self.state.rules, &self.cfg.condition_labels, obs);
        let covered = matching_policy(&self.state.rules, &ctx)
            .into_iter()
            .any(|i| self.state.rules[i].action() == Some(action));
        if !covered {
            self.inject_generic(action);
        }
    }

    /// predict → act → observe → error → rewards → update → metrics.
    pub fn run_iteration(&mut self) -> Result<MetricsRow> {
        let obs = self.state.obs.clone();
        let action = self.choose_action(&obs);
        self.ensure_producible(&obs, &action);
        let result = self.env.step(&action)?;
        let mut context = None;
        if let Some(airis) = self.state.airis.as_mut() {
            airis.observe(&obs, &action, &result)?;
            let mut ctx = obs.clone();
            ctx.set(Term::fact(ACTION, &[&action]))?;
            for f in airis.context_facts() {
                ctx.insert(f)?;
            }
            context = Some(ctx);
        }
        self.state.t += 1;
        let t = self.state.t;
        self.state.history.push(Transition {
            t,
            episode: self.state.episode,
            state: obs,
            action: action.clone(),
            next: result.obs.clone(),
            reward: result.reward,
            events: result.info.events.clone(),
            context,
            ret: 0.0,
        })?;
        self.state.history.credit(result.reward, self.cfg.gamma);
        if result.done {
            self.state.episode += 1;
            self.state.obs = self.env.reset(episode_seed(self.cfg.seed, self.state.episode));
            if let Some(a) = self.state.airis.as_mut() {
                a.begin_episode();
            }
        } else {
            self.state.obs = result.obs.clone();
        }

        if t.is_multiple_of(self.cfg.update_every as u64) {
            let report = match self.cfg.updater {
                Updater::Naive => self.local_search_update(),
                Updater::Natural | Updater::NaturalAiris => self.natural_update(),
            };
            match report {
                Ok(r) => self.state.last_f = r.f_after,
                Err(Error::InfiniteDivergence(_)) | Err(Error::StepRejected(_)) => self.state.skipped_updates += 1,
                Err(e) => return Err(e),
            }
        }

        let w = RewardWeights::new(self.cfg.alpha_int, self.cfg.alpha_ep)?.decayed(
            t as usize,
            self.cfg.iterations,
            self.cfg.ep_decay,
        );
        let e_t = self.state.last_f;
        let r_ep = self.state.last_surprise;
        let row = MetricsRow {
            iter: t,
            e_t,
            r_int: -e_t,
            r_ep,
            r_env: result.reward,
            r_t: combined_reward(e_t, r_ep, result.reward, w),
            n_rules: self.state.rules.len(),
            updater: self.cfg.updater,
        };
        self.state.metrics.push(row.clone());
        Ok(row)
    }

    /// Runs the remaining configured iterations.
    pub fn train(mut self) -> Result<TrainerState> {
        while (self.state.t as usize) < self.cfg.iterations {
            self.run_iteration()?;
        }
        Ok(self.state)
    }

    fn maybe_abstract(&mut self) {
        let Some(ac) = self.cfg.abstraction.clone() else { return };
        if ac.every == 0 || !self.state.updates.is_multiple_of(ac.every) || self.state.updates == 0 {
            return;
        }
        let params = AbstractionParams {
            features: &ac.features,
            support: ac.support,
            lift: ac.lift,
        };
        let found = propose_abstraction(self.state.history.iter(), &params, &self.state.labels, self.state.labels.len());
        for (label, label_rule, policy) in found {
            if self.state.rules.len() + 2 > self.cfg.max_rules {
                break;
            }
            let logit = self.state.entry_logit();
            self.state.push_rule(label_rule, logit);
            self.state.push_rule(policy, logit);
            self.state.labels.push(label);
        }
    }

    fn sync_airis(&mut self) {
        let Some(airis) = self.state.airis.as_ref() else { return };
        let mut fresh: Vec<(u64, RewriteRule, f64)> = Vec::new();
        for r in airis.promising(3, 0.5) {
            if self.state.lowered.contains_key(&r.id) || !r.effect_add.iter().any(|e| e.label() == "Event") {
                continue;
            }
            if let Ok(rw) = r.lower(RuleId(0)) {
                fresh.push((r.id, rw, r.confidence()));
            }
        }
        let known: Vec<u64> = airis.rules().iter().map(|r| r.id).collect();
        let gone: Vec<RuleId> = self
            .state
            .lowered
            .iter()
            .filter(|(c, _)| !known.contains(c))
            .filter_map(|(_, r)| *r)
            .collect();
        for id in gone {
            if let Some(i) = self.state.rules.iter().position(|r| r.id == id) {
                self.state.remove_rule(i);
            }
        }
        for (cid, rw, conf) in fresh {
            if self.state.rules.len() >= self.cfg.max_rules {
                break;
            }
            if self.state.rules.iter().any(|x| x.same_structure(&rw)) {
                self.state.lowered.insert(cid, None);
                continue;
            }
            let logit = self.state.entry_logit() + (conf + 1e-3).ln();
            let id = self.state.push_rule(rw, logit);
            self.state.lowered.insert(cid, Some(id));
        }
    }

    fn mutation_contexts(model: &WindowModel) -> Vec<WorldState> {
        model.contexts(ChannelKind::Policy).cloned().collect()
    }

    /// Scores an edit of rule `i`: the new error and the new rule's columns
    /// and logit.
    fn score_edit(
        &self,
        model: &mut WindowModel,
        cols: &[RuleColumns],
        i: usize,
        edit: &CandidateEdit,
    ) -> Option<(f64, RuleColumns, f64)> {
        let col = model.columns(&edit.rule);
        // an edit that predicts exactly what an existing rule predicts only
        // shifts mass around
        if cols.contains(&col) {
            return None;
        }
        let mut trial_cols = cols.to_vec();
        let mut logits = self.state.params.logits.clone();
        let logit = if edit.kind.spawns() {
            if self.state.rules.len() >= self.cfg.max_rules {
                return None;
            }
            let l = self.state.entry_logit();
            trial_cols.push(col.clone());
            logits.push(l);
            l
        } else {
            trial_cols[i] = col.clone();
            logits[i]
        };
        let f = f_value(model, &trial_cols, &logits);
        f.is_finite().then_some((f, col, logit))
    }

    /// Windowed error the population would have after `edit` of rule `i`,
    /// or `None` when the edit is inadmissible (duplicate prediction,
    /// population full, or an unexplained observation).
    pub fn edit_error(&self, i: usize, edit: &CandidateEdit) -> Option<f64> {
        let mut model = self.window_model();
        let cols = self.all_columns(&mut model);
        self.score_edit(&mut model, &cols, i, edit).map(|x| x.0)
    }

    fn apply_edit(&mut self, cols: &mut Vec<RuleColumns>, i: usize, edit: CandidateEdit, col: RuleColumns, logit: f64) {
        if edit.kind.spawns() {
            self.state.push_rule(edit.rule, logit);
            cols.push(col);
        } else {
            let id = RuleId(self.state.next_rule_id);
            self.state.next_rule_id += 1;
            let old = self.state.rules[i].id;
            self.state.rules[i] = edit.rule.with_id(id);
            self.state.low_counts.remove(&old);
            self.state.distances.retain(|k, _| k.0 != old && k.1 != old);
            cols[i] = col;
        }
    }

    /// For each policy rule, the best of its sampled edits replaces (or
    /// joins) it when that strictly lowers the windowed error; then a plain
    /// gradient step on the logits.
    pub fn local_search_update(&mut self) -> Result<UpdateReport> {
        self.state.updates += 1;
        self.maybe_abstract();
        let mut model = self.window_model();
        let mut cols = self.all_columns(&mut model);
        let mut f = f_value(&model, &cols, &self.state.params.logits);
        if !f.is_finite() {
            return Err(Error::InfiniteDivergence("window".into()));
        }
        let mut report = UpdateReport {
            f_before: f,
            ..Default::default()
        };
        let contexts = Self::mutation_contexts(&model);
        let ids: Vec<RuleId> = self
            .state
            .rules
            .iter()
            .filter(|r| r.role() == RuleRole::Policy)
            .map(|r| r.id)
            .collect();
        for id in ids {
            let Some(i) = self.state.rules.iter().position(|r| r.id == id) else { continue };
            let edits = {
                let scope = MutationScope {
                    contexts: &contexts,
                    actions: &self.actions,
                    condition_labels: &self.cfg.condition_labels,
                    population: &self.state.rules,
                };
                let rule = self.state.rules[i].clone();
                neighborhood(&rule, self.cfg.budget, &scope, &mut self.state.rng)
            };
            let mut best: Option<(f64, f64, String, CandidateEdit, RuleColumns, f64)> = None;
            for e in edits {
                let Some((fe, col, logit)) = self.score_edit(&mut model, &cols, i, &e) else { continue };
                let dist = rule_distance(&self.state.rules[i], &e.rule);
                let key = canonical_tree(&e.rule).to_string();
                let better = match &best {
                    None => true,
                    Some((bf, bd, bk, ..)) => {
                        fe < *bf || (fe == *bf && (dist < *bd || (dist == *bd && key < *bk)))
                    }
                };
                if better {
                    best = Some((fe, dist, key, e, col, logit));
                }
            }
            if let Some((fe, _, _, e, col, logit)) = best {
                if fe < f {
                    self.apply_edit(&mut cols, i, e, col, logit);
                    f = fe;
                    report.edits += 1;
                }
            }
        }
        // plain gradient step with backtracking
        let g = grad_xi(&model, &cols, &self.state.params.logits)?;
        let mut h = self.cfg.h;
        for _ in 0..self.cfg.backtrack {
            let cand: Vec<f64> = self.state.params.logits.iter().zip(&g).map(|(x, d)| x - h * d).collect();
            let fc = f_value(&model, &cols, &cand);
            if fc < f {
                self.state.params = RuleParams::new(recenter(&cand))?;
                report.stepped = true;
                break;
            }
            h *= 0.5;
        }
        report.pruned = self.prune(&model, &cols);
        self.finish(report, &mut model)
    }

    fn finish(&mut self, mut report: UpdateReport, model: &mut WindowModel) -> Result<UpdateReport> {
        let cols = self.all_columns(model);
        let p = self.state.probs();
        report.f_after = model.objective(&cols).value(&p)?;
        self.state.last_surprise = model.surprise(&cols, &p)?;
        Ok(report)
    }

    /// Natural-gradient step on the logits, backtracking until the windowed
    /// error strictly drops, then a few exploratory edits and pruning.
    pub fn natural_update(&mut self) -> Result<UpdateReport> {
        self.state.updates += 1;
        self.maybe_abstract();
        self.sync_airis();
        let mut model = self.window_model();
        let mut cols = self.all_columns(&mut model);
        let mut f = f_value(&model, &cols, &self.state.params.logits);
        if !f.is_finite() {
            return Err(Error::InfiniteDivergence("window".into()));
        }
        let mut report = UpdateReport {
            f_before: f,
            ..Default::default()
        };
        if self.state.rules.len() >= 2 {
            if let Some((params, fc)) = self.natural_step_on(&model, &cols, f)? {
                self.state.params = params;
                f = fc;
                report.stepped = true;
            }
        }
        // exploration
        let contexts = Self::mutation_contexts(&model);
        for _ in 0..self.cfg.explore_edits {
            let idx = policy_indices(&self.state.rules, &mut self.state.rng);
            let Some(&i) = idx.first() else { break };
            let edits = {
                let scope = MutationScope {
                    contexts: &contexts,
                    actions: &self.actions,
                    condition_labels: &self.cfg.condition_labels,
                    population: &self.state.rules,
                };
                let rule = self.state.rules[i].clone();
                neighborhood(&rule, 1, &scope, &mut self.state.rng)
            };
            for e in edits {
                if let Some((fe, col, logit)) = self.score_edit(&mut model, &cols, i, &e) {
                    if fe < f {
                        self.apply_edit(&mut cols, i, e, col, logit);
                        f = fe;
                        report.edits += 1;
                    }
                }
            }
        }
        if report.stepped || report.edits > 0 {
            self.state.params = RuleParams::new(recenter(&self.state.params.logits))?;
        }
        report.pruned = self.prune(&model, &cols);
        self.finish(report, &mut model)
    }

    #[allow(clippy::needless_range_loop)]
    fn rule_graph(&mut self) -> RuleGraph {
        let n = self.state.rules.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let x = self.state.distance(i, j);
                d[i][j] = x;
                d[j][i] = x;
            }
        }
        graph_from_distances(&d, self.cfg.k, self.cfg.sigma)
    }

    /// The measure-dependent Laplacian and the metric tensor at the current
    /// population.
    pub fn geometry(&mut self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let graph = self.rule_graph();
        let l = laplacian(&graph, &self.state.probs())?;
        let g = metric_at(&graph, &self.state.params)?;
        Ok((l, g))
    }

    /// The accepted natural step and its error, if any trial step lowered
    /// the error.
    fn natural_step_on(&mut self, model: &WindowModel, cols: &[RuleColumns], f: f64) -> Result<Option<(RuleParams, f64)>> {
        let g = grad_xi(model, cols, &self.state.params.logits)?;
        if g.iter().all(|x| x.abs() < 1e-15) {
            return Ok(None);
        }
        let graph = self.rule_graph();
        let metric = metric_at(&graph, &self.state.params)?;
        let ridge = self.cfg.ridge.unwrap_or_else(|| default_ridge(&metric));
        let params = &self.state.params;
        match self.cfg.scheme {
            Scheme::Jko => {
                let obj = |x: &[f64]| model.objective(cols).value(&softmax(x));
                let out = jko_step(params, &obj, &metric, self.cfg.h)?;
                let fc = f_value(model, cols, &out.params.logits);
                Ok((out.progressed && fc < f).then_some((out.params, fc)))
            }
            Scheme::Euler => {
                let unit = natural_step(params, &g, &metric, 1.0, ridge)?;
                let delta: Vec<f64> = params.logits.iter().zip(&unit.logits).map(|(x, y)| x - y).collect();
                let biggest = delta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let mut h = self.cfg.h;
                if biggest * h > self.cfg.trust {
                    h = self.cfg.trust / biggest;
                }
                for _ in 0..self.cfg.backtrack {
                    let cand: Vec<f64> = params.logits.iter().zip(&delta).map(|(x, dx)| x - h * dx).collect();
                    let fc = f_value(model, cols, &cand);
                    if fc < f {
                        return Ok(Some((RuleParams::new(cand)?, fc)));
                    }
                    h *= 0.5;
                }
                Err(Error::StepRejected("no step size lowered the error".into()))
            }
        }
    }

    /// Removes rules whose share stayed under the floor for the patience
    /// period, unless that would leave an observed outcome unexplained.
    fn prune(&mut self, model: &WindowModel, cols: &[RuleColumns]) -> usize {
        let probs = self.state.probs();
        let mut doomed: Vec<usize> = Vec::new();
        for (i, rule) in self.state.rules.iter().enumerate() {
            let share = model.max_share(cols, &probs, i).unwrap_or(probs[i]);
            let c = self.state.low_counts.entry(rule.id).or_insert(0);
            if share < self.cfg.prune_floor {
                *c += 1;
            } else {
                *c = 0;
            }
            if *c >= self.cfg.prune_patience && rule.role() != RuleRole::Label {
                doomed.push(i);
            }
        }
        let mut keep: Vec<bool> = vec![true; self.state.rules.len()];
        let baseline = {
            let all: Vec<&RuleColumns> = cols.iter().collect();
            model.unproducible(&all)
        };
        let mut removed = 0;
        for &i in &doomed {
            keep[i] = false;
            let kept: Vec<&RuleColumns> = cols.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c).collect();
            let policy_left = self
                .state
                .rules
                .iter()
                .zip(&keep)
                .any(|(r, k)| *k && r.role() == RuleRole::Policy);
            if model.unproducible(&kept) > baseline || !policy_left {
                keep[i] = true;
            } else {
                removed += 1;
            }
        }
        for i in (0..keep.len()).rev() {
            if !keep[i] {
                self.state.remove_rule(i);
            }
        }
        if removed > 0 {
            self.state.params = RuleParams::new(recenter(&self.state.params.logits)).expect("finite logits");
        }
        removed
    }
}

/// Trains from scratch and returns the final state with its metrics.
pub fn train(cfg: TrainerConfig, env_cfg: &EnvConfig) -> Result<TrainerState> {
    Trainer::new(cfg, env_cfg)?.train()
}

/// Random draws used only for seeding, kept out of the training stream.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    ChaCha8Rng::seed_from_u64(seed ^ salt.rotate_left(17)).gen()
}
