mod oracle;

use metatune::{classify_rq2, BenefitTag, Rq2Facts, SelectionFacts, WidthComparison};

#[test]
fn every_combination_maps_to_the_defined_tag() {
    let mut seen = std::collections::HashSet::new();
    let mut rows = 0;
    for default_reliable in [false, true] {
        for any_reliable in [false, true] {
            for selection_made in [false, true] {
                for selected_reliable in [false, true] {
                    for (significant, narrower) in [(false, false), (true, true), (true, false)] {
                        let comparison = match (significant, narrower) {
                            (false, _) => WidthComparison::NotSignificant,
                            (true, true) => WidthComparison::Narrower,
                            (true, false) => WidthComparison::Wider,
                        };
                        let facts = Rq2Facts {
                            default_reliable,
                            any_reliable,
                            selection: selection_made.then_some(SelectionFacts {
                                reliable: selected_reliable,
                                comparison,
                            }),
                        };
                        let got = classify_rq2(facts);
                        let want = oracle::rq2_reference(
                            default_reliable,
                            any_reliable,
                            selection_made,
                            selected_reliable,
                            significant,
                            narrower,
                        );
                        assert_eq!(got.label(), want, "{facts:?}");
                        seen.insert(got);
                        rows += 1;
                    }
                }
            }
        }
    }
    assert_eq!(rows, 48);
    assert_eq!(seen.len(), BenefitTag::ALL.len(), "every tag is reachable");
}
