//! TrueSkill for free-for-all games: one player per team, ranks with ties,
//! approximate message passing over the chain of rank-adjacent differences.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

pub const MU: f64 = 25.0;
pub const SIGMA: f64 = MU / 3.0;
pub const BETA: f64 = SIGMA / 2.0;
pub const TAU: f64 = SIGMA / 100.0;
pub const DRAW_PROBABILITY: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rating {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for Rating {
    fn default() -> Self {
        Rating {
            mu: MU,
            sigma: SIGMA,
        }
    }
}

impl Rating {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Rating { mu, sigma }
    }

    /// Conservative skill estimate.
    pub fn exposure(&self) -> f64 {
        self.mu - 3.0 * self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Env {
    pub beta: f64,
    pub tau: f64,
    pub draw_probability: f64,
}

impl Default for Env {
    fn default() -> Self {
        Env {
            beta: BETA,
            tau: TAU,
            draw_probability: DRAW_PROBABILITY,
        }
    }
}

/// Gaussian in natural parameters: precision and precision-adjusted mean.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Gaussian {
    pi: f64,
    tau: f64,
}

impl Gaussian {
    const UNIFORM: Gaussian = Gaussian { pi: 0.0, tau: 0.0 };

    fn from_mu_sigma(mu: f64, sigma: f64) -> Self {
        let pi = 1.0 / (sigma * sigma);
        Gaussian { pi, tau: pi * mu }
    }

    fn mu(self) -> f64 {
        if self.pi == 0.0 {
            0.0
        } else {
            self.tau / self.pi
        }
    }

    fn var(self) -> f64 {
        1.0 / self.pi
    }

    fn mul(self, o: Gaussian) -> Gaussian {
        Gaussian {
            pi: self.pi + o.pi,
            tau: self.tau + o.tau,
        }
    }

    fn div(self, o: Gaussian) -> Gaussian {
        Gaussian {
            pi: self.pi - o.pi,
            tau: self.tau - o.tau,
        }
    }

    /// Distribution of `a*x + b*y` for independent `x = self`, `y = o`.
    fn combine(self, a: f64, o: Gaussian, b: f64) -> Gaussian {
        if self.pi == 0.0 || o.pi == 0.0 {
            return Gaussian::UNIFORM;
        }
        let var = a * a * self.var() + b * b * o.var();
        Gaussian::from_mu_sigma(a * self.mu() + b * o.mu(), var.sqrt())
    }

    /// Adds independent noise of variance `v`.
    fn widen(self, v: f64) -> Gaussian {
        if self.pi == 0.0 {
            return self;
        }
        Gaussian::from_mu_sigma(self.mu(), (self.var() + v).sqrt())
    }

    fn distance(self, o: Gaussian) -> f64 {
        (self.pi - o.pi)
            .abs()
            .max(if self.pi == 0.0 || o.pi == 0.0 {
                0.0
            } else {
                (self.mu() - o.mu()).abs()
            })
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Additive and multiplicative corrections for a win margin above `eps`.
fn win_correction(t: f64, eps: f64) -> (f64, f64) {
    let n = std_normal();
    let x = t - eps;
    let denom = n.cdf(x);
    let v = if denom < 1e-300 { -x } else { n.pdf(x) / denom };
    (v, v * (v + x))
}

/// Corrections for a difference inside `[-eps, eps]`.
fn draw_correction(t: f64, eps: f64) -> (f64, f64) {
    let n = std_normal();
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let t = t.abs();
    let denom = n.cdf(eps - t) - n.cdf(-eps - t);
    if denom < 1e-300 {
        return (sign * (eps - t), 1.0);
    }
    let v = (n.pdf(-eps - t) - n.pdf(eps - t)) / denom;
    let w = v * v + ((eps - t) * n.pdf(eps - t) + (eps + t) * n.pdf(eps + t)) / denom;
    (sign * v, w)
}

/// Half-width of the draw region of a two-player performance difference.
pub fn draw_margin(env: &Env) -> f64 {
    std_normal().inverse_cdf((env.draw_probability + 1.0) / 2.0) * 2f64.sqrt() * env.beta
}

/// Updates ratings after one game. `ranks[i]` is player `i`'s placing
/// (lower is better); equal ranks are ties.
pub fn rate(env: &Env, ratings: &[Rating], ranks: &[usize]) -> Vec<Rating> {
    assert_eq!(ratings.len(), ranks.len());
    let n = ratings.len();
    if n < 2 {
        return ratings.to_vec();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (ranks[i], i));
    let eps = draw_margin(env);
    let beta2 = env.beta * env.beta;

    let prior: Vec<Gaussian> = order
        .iter()
        .map(|&i| {
            Gaussian::from_mu_sigma(
                ratings[i].mu,
                (ratings[i].sigma.powi(2) + env.tau.powi(2)).sqrt(),
            )
        })
        .collect();
    let perf_down: Vec<Gaussian> = prior.iter().map(|g| g.widen(beta2)).collect();
    // Messages from difference factor k to performances k (left) and k+1 (right).
    let mut to_left = vec![Gaussian::UNIFORM; n - 1];
    let mut to_right = vec![Gaussian::UNIFORM; n - 1];
    let mut trunc = vec![Gaussian::UNIFORM; n - 1];
    let tied: Vec<bool> = (0..n - 1)
        .map(|k| ranks[order[k]] == ranks[order[k + 1]])
        .collect();

    let perf = |k: usize, to_left: &[Gaussian], to_right: &[Gaussian]| -> Gaussian {
        let mut g = perf_down[k];
        if k > 0 {
            g = g.mul(to_right[k - 1]);
        }
        if k + 1 < n {
            g = g.mul(to_left[k]);
        }
        g
    };

    let update = |k: usize,
                  to_left: &mut Vec<Gaussian>,
                  to_right: &mut Vec<Gaussian>,
                  trunc: &mut Vec<Gaussian>| {
        let a = perf(k, to_left, to_right).div(to_left[k]);
        let b = perf(k + 1, to_left, to_right).div(to_right[k]);
        let cavity = a.combine(1.0, b, -1.0);
        let sqrt_pi = cavity.pi.sqrt();
        let t = cavity.tau / sqrt_pi;
        let e = eps * sqrt_pi;
        let (v, w) = if tied[k] {
            draw_correction(t, e)
        } else {
            win_correction(t, e)
        };
        let denom = 1.0 - w;
        let marginal = Gaussian {
            pi: cavity.pi / denom,
            tau: (cavity.tau + sqrt_pi * v) / denom,
        };
        let new_trunc = marginal.div(cavity);
        let delta = new_trunc.distance(trunc[k]);
        trunc[k] = new_trunc;
        to_left[k] = new_trunc.combine(1.0, b, 1.0);
        to_right[k] = a.combine(1.0, new_trunc, -1.0);
        delta
    };

    if n == 2 {
        update(0, &mut to_left, &mut to_right, &mut trunc);
    } else {
        for _ in 0..100 {
            let mut delta: f64 = 0.0;
            for k in 0..n - 2 {
                delta = delta.max(update(k, &mut to_left, &mut to_right, &mut trunc));
            }
            for k in (1..n - 1).rev() {
                delta = delta.max(update(k, &mut to_left, &mut to_right, &mut trunc));
            }
            if delta <= 1e-6 {
                break;
            }
        }
    }

    let mut out = ratings.to_vec();
    for (k, &i) in order.iter().enumerate() {
        let up = perf(k, &to_left, &to_right).div(perf_down[k]).widen(beta2);
        let post = prior[k].mul(up);
        out[i] = Rating::new(post.mu(), post.var().sqrt());
    }
    out
}

/// Updates the ratings of agents that may fill several seats of one game.
///
/// Each seat is rated as an independent player starting from its agent's
/// rating; the per-seat evidence is then multiplied into the agent's prior.
pub fn rate_seats(env: &Env, agents: &[Rating], seats: &[usize], ranks: &[usize]) -> Vec<Rating> {
    let seat_ratings: Vec<Rating> = seats.iter().map(|&a| agents[a]).collect();
    let posts = rate(env, &seat_ratings, ranks);
    let mut out = agents.to_vec();
    for (a, r) in agents.iter().enumerate() {
        let prior = Gaussian::from_mu_sigma(r.mu, (r.sigma.powi(2) + env.tau.powi(2)).sqrt());
        let mut post = prior;
        let mut seen = false;
        for (s, &agent) in seats.iter().enumerate() {
            if agent == a {
                post = post.mul(Gaussian::from_mu_sigma(posts[s].mu, posts[s].sigma).div(prior));
                seen = true;
            }
        }
        if seen {
            out[a] = Rating::new(post.mu(), post.var().sqrt());
        }
    }
    out
}

/// Probability that a draw margin is exceeded in favour of the first player.
pub fn win_probability(env: &Env, a: Rating, b: Rating) -> f64 {
    let denom = (2.0 * env.beta * env.beta + a.sigma * a.sigma + b.sigma * b.sigma).sqrt();
    std_normal().cdf((a.mu - b.mu) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_player_win_is_antisymmetric() {
        let env = Env::default();
        let r = rate(&env, &[Rating::default(), Rating::default()], &[1, 2]);
        let d0 = r[0].mu - MU;
        let d1 = r[1].mu - MU;
        assert!(d0 > 0.0 && d1 < 0.0);
        assert!(close(d0, -d1, 1e-9));
        assert!(r[0].sigma < SIGMA && r[1].sigma < SIGMA);
        assert!(close(r[0].sigma, r[1].sigma, 1e-12));
    }

    #[test]
    fn matches_published_two_player_values() {
        let env = Env::default();
        let win = rate(&env, &[Rating::default(), Rating::default()], &[1, 2]);
        assert!(close(win[0].mu, 29.396, 5e-4) && close(win[0].sigma, 7.171, 5e-4));
        assert!(close(win[1].mu, 20.604, 5e-4) && close(win[1].sigma, 7.171, 5e-4));
        let draw = rate(&env, &[Rating::default(), Rating::default()], &[1, 1]);
        assert!(close(draw[0].mu, 25.0, 1e-9) && close(draw[0].sigma, 6.458, 5e-4));
    }

    #[test]
    fn draw_margin_matches_closed_form() {
        let env = Env::default();
        let expected = 0.125_661_346_855_074_1 * 2f64.sqrt() * BETA;
        assert!(close(draw_margin(&env), expected, 1e-9));
    }

    #[test]
    fn seven_way_tie_pulls_together() {
        let env = Env::default();
        let ratings: Vec<Rating> = (0..7).map(|i| Rating::new(20.0 + i as f64, 5.0)).collect();
        let r = rate(&env, &ratings, &[1; 7]);
        assert!(r[0].mu > 20.0 && r[6].mu < 26.0);
        assert!(r[6].mu - r[0].mu < 6.0);
        assert!(r.iter().all(|x| x.sigma < 5.0));
    }

    #[test]
    fn better_rank_never_gains_less() {
        let env = Env::default();
        let r = rate(&env, &[Rating::default(); 7], &[1, 2, 3, 4, 5, 6, 7]);
        for k in 0..6 {
            assert!(r[k].mu > r[k + 1].mu);
        }
        let total: f64 = r.iter().map(|x| x.mu - MU).sum();
        assert!(total.abs() < 1e-6);
    }

    #[test]
    fn seat_combining_matches_single_seat() {
        let env = Env::default();
        let agents = [Rating::default(), Rating::new(30.0, 4.0)];
        let direct = rate(&env, &agents, &[2, 1]);
        let seated = rate_seats(&env, &agents, &[0, 1], &[2, 1]);
        for i in 0..2 {
            assert!(close(direct[i].mu, seated[i].mu, 1e-9));
            assert!(close(direct[i].sigma, seated[i].sigma, 1e-9));
        }
    }

    #[test]
    fn matches_reference_free_for_all() {
        let env = Env::default();
        let ratings = [
            Rating::new(25.0, SIGMA),
            Rating::new(30.0, 4.0),
            Rating::new(20.0, 6.0),
            Rating::new(25.0, 2.0),
            Rating::new(27.0, 5.0),
            Rating::new(22.0, 7.0),
            Rating::new(24.0, 3.0),
        ];
        let expected = [
            (26.615859845227718, 4.49572278937371),
            (32.80124315460827, 3.469546669922904),
            (22.3216674830727, 3.890476714949704),
            (24.71975939180623, 1.8757621743037172),
            (29.259590524742197, 3.772986563663505),
            (15.71938882472444, 5.126646477022757),
            (22.603848514878525, 2.652751930660223),
        ];
        let r = rate(&env, &ratings, &[2, 0, 3, 3, 1, 6, 5]);
        for (got, (mu, sigma)) in r.iter().zip(expected) {
            assert!(close(got.mu, mu, 1e-3), "{} vs {}", got.mu, mu);
            assert!(close(got.sigma, sigma, 1e-3), "{} vs {}", got.sigma, sigma);
        }
    }
}
