/// How a system turn ended, from the reward's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnOutcome {
    Continue,
    Success,
    /// Goal unmet or turn limit reached.
    Failure,
}

/// `-1` per non-terminal system turn, `+2 max_t` on success, `-max_t` on failure.
pub fn reward(outcome: TurnOutcome, max_t: u32) -> f64 {
    match outcome {
        TurnOutcome::Continue => -1.0,
        TurnOutcome::Success => 2.0 * f64::from(max_t),
        TurnOutcome::Failure => -f64::from(max_t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table() {
        assert_eq!(reward(TurnOutcome::Success, 40), 80.0);
        assert_eq!(reward(TurnOutcome::Failure, 40), -40.0);
        assert_eq!(reward(TurnOutcome::Continue, 40), -1.0);
    }
}
