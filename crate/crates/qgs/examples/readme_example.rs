use qgs::field::Field;
use qgs::graphstate::{EncodedGraph, LabelledGraph, VertexId};
use qgs::pauli::MeasurementBasis;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let field = Field::new(5)?;
    let mut g = LabelledGraph::with_vertices(field, 4);
    g.add_edge(VertexId(1), VertexId(2), field.elem(2))?;
    g.set_z(VertexId(1), field.elem(1))?;

    let encoded = EncodedGraph::new(g)?;
    let basis = MeasurementBasis::parse("X2Z", field)?;
    let result = encoded.measure_symbolic(VertexId(1), basis, field.elem(2))?;
    println!("{}", result.reduced.to_text());
    Ok(())
}
