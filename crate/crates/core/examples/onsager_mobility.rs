//! Builds a projected Onsager matrix, its reduced form on `(varrho, q)` and
//! the spectrum of the product that drives the parabolic block.

use mixflow::changevar::{BasisChoice, BasisPair, ChangeOfVariables, ReducedState};
use mixflow::mobility::{spd_product_eigs, BaseMobility, OnsagerSpec, ReactionSpec};
use mixflow::thermo::{Composition, FreeEnergyModel, SpeciesSystem};
use nalgebra::DVector;

fn main() -> mixflow::Result<()> {
    let masses = vec![1.0, 2.0, 3.0];
    let spec = OnsagerSpec::new(
        3,
        BaseMobility::DiagonalNumberWeighted {
            d: vec![1.0, 0.5, 0.25],
            masses: masses.clone(),
        },
    )?;
    let rho = Composition::from_slice(&[0.5, 0.3, 0.2])?;
    let m = spec.build(&rho)?;
    println!("M =\n{m:.5}");
    println!(
        "|M 1| = {:.1e}",
        (&m * DVector::from_element(3, 1.0)).amax()
    );

    let model = FreeEnergyModel::ideal_gas(SpeciesSystem::new(masses, 1.0)?, 1.0)?;
    let basis = BasisPair::new(3, &BasisChoice::LastSpeciesDifferences)?;
    let cv = ChangeOfVariables::new(model, basis.clone())?;
    let point = cv.evaluate(
        &ReducedState::new(1.0, DVector::from_vec(vec![0.1, -0.2])),
        None,
    )?;
    let bundle = spec.reduced(&basis, &point)?;
    println!("reduced mobility =\n{:.5}", bundle.mt);

    let eig = spd_product_eigs(
        &point.r_q.clone().try_inverse().expect("R_q is SPD"),
        &bundle.mt,
    )?;
    println!("eigenvalues of R_q^-1 M~ = {:?}", eig.values.as_slice());

    let reaction = ReactionSpec::LinearRelaxation { rate: 0.5 };
    let r = reaction.reduced(&basis, &point);
    println!("reduced reaction term = {:?}", r.rt.as_slice());
    Ok(())
}
