//! Imports an ETPC-style XML document, writes canonical JSONL and compares
//! the occurrence counts with the published table.

use std::sync::Arc;

use paratype::corpus::{import_etpc_xml_str, type_counts, verify_counts, write_jsonl, EtpcMapping};
use paratype::Taxonomy;

const XML: &str = r#"<root>
  <pair>
    <pair_id>1</pair_id>
    <sent1_raw>She liked the musical.</sent1_raw>
    <sent2_raw>She enjoyed the show.</sent2_raw>
    <etpc_label>1</etpc_label>
    <paraphrase_types>
      <paraphrase_type><type_id>6</type_id><s1_scope>1</s1_scope><s2_scope>1</s2_scope></paraphrase_type>
      <paraphrase_type><type_id>6</type_id><s1_scope>3</s1_scope><s2_scope>3</s2_scope></paraphrase_type>
      <paraphrase_type><type_id>25</type_id><s1_scope>0,2,4</s1_scope><s2_scope>0,2,4</s2_scope></paraphrase_type>
    </paraphrase_types>
  </pair>
  <pair>
    <pair_id>2</pair_id>
    <sent1_raw>He left.</sent1_raw>
    <sent2_raw>He left early.</sent2_raw>
    <etpc_label>1</etpc_label>
    <paraphrase_types>
      <paraphrase_type><type_id>22</type_id><s1_scope></s1_scope><s2_scope>2</s2_scope></paraphrase_type>
    </paraphrase_types>
  </pair>
</root>"#;

fn main() {
    let tax = Arc::new(Taxonomy::default());
    let import = import_etpc_xml_str(XML, &EtpcMapping::default(), tax).expect("valid document");
    println!("imported {} pairs, skipped {}", import.corpus.len(), import.skipped.len());

    let mut out = Vec::new();
    write_jsonl(&import.corpus, &mut out).expect("in-memory write");
    print!("{}", String::from_utf8_lossy(&out));

    let table = type_counts(&import.corpus);
    println!("occurrences: {} (raw records {})", table.total, table.raw_annotations);
    let mismatches = verify_counts(&table).into_iter().filter(|c| !c.ok()).count();
    println!("{mismatches} rows differ from the published counts (expected for a toy corpus)");
}
