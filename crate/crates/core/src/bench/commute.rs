use crate::circuit::{DependencyGraph, Gate, GateKind};

/// Whether two logical gates commute as operators.
///
/// Gates on disjoint qubits commute. RZZ is diagonal, so it commutes with other RZZ gates
/// and with a CX whose target lies outside its pair. RX commutes with RX and with a CX
/// whose control it avoids. Two CX gates commute unless one's control is the other's target.
pub fn commutes(a: &Gate, b: &Gate) -> bool {
    use GateKind::*;
    if !a.shares_qubit(b) {
        return true;
    }
    let pair = |g: &Gate| (g.qu, g.qv.expect("two-qubit gate"));
    match (a.kind, b.kind) {
        (Rzz, Rzz) => true,
        (Rx, Rx) => true,
        (Rx, Rzz) | (Rzz, Rx) => false,
        (Cx, Cx) => {
            let ((c1, t1), (c2, t2)) = (pair(a), pair(b));
            c1 != t2 && t1 != c2
        }
        (Rzz, Cx) | (Cx, Rzz) => {
            let (zz, cx) = if a.kind == Rzz { (a, b) } else { (b, a) };
            let (_, t) = pair(cx);
            !zz.acts_on(t)
        }
        (Rx, Cx) | (Cx, Rx) => {
            let (x, cx) = if a.kind == Rx { (a, b) } else { (b, a) };
            let (c, _) = pair(cx);
            x.qu != c
        }
        (Swap, _) | (_, Swap) => false,
    }
}

/// Edge `i -> j` for every `i < j` whose gates share a qubit and do not commute.
pub fn build_dependency_graph(gates: &[Gate], commute: impl Fn(&Gate, &Gate) -> bool) -> DependencyGraph {
    let mut edges = Vec::new();
    for j in 0..gates.len() {
        for i in 0..j {
            if gates[i].shares_qubit(&gates[j]) && !commute(&gates[i], &gates[j]) {
                edges.push((i, j));
            }
        }
    }
    DependencyGraph::new(gates.len(), edges).expect("forward edges are acyclic")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!(commutes(&Gate::rzz(0.1, 0, 1), &Gate::rzz(0.2, 2, 3)));
        assert!(!commutes(&Gate::rzz(0.1, 0, 1), &Gate::rx(0.2, 0)));
        assert!(commutes(&Gate::cx(0, 1), &Gate::cx(2, 3)));
        assert!(!commutes(&Gate::cx(0, 1), &Gate::cx(1, 2)));
        assert!(commutes(&Gate::rzz(0.1, 0, 1), &Gate::cx(0, 2)));
        assert!(commutes(&Gate::cx(0, 1), &Gate::cx(0, 2)));
        assert!(commutes(&Gate::cx(0, 2), &Gate::cx(1, 2)));
    }

    #[test]
    fn chain_on_one_qubit_is_a_path() {
        let gates = vec![Gate::rx(0.1, 0), Gate::rzz(0.2, 0, 1), Gate::rx(0.3, 0)];
        let g = build_dependency_graph(&gates, commutes);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }
}
