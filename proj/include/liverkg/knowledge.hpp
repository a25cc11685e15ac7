#pragma once

// Built-in rule and schema sources for the liver domain.

#include <liverkg/rules.hpp>

#include <string_view>
#include <vector>

namespace liverkg::knowledge {

// Diagnostic rules learned from the HCV table, as published in SWRL form,
// followed by the tree rules rewritten into SWRL. Thresholds are kept as
// printed, including the redundant conjuncts.
inline constexpr std::string_view diagnostic_rules = R"(# published SWRL conversions
hepc_low_enzymes: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:lessThanOrEqualTo(?alp, "52.3"^^xsd:float) ^ hasValueBIL(?x, ?bil) ^ swrlb:lessThanOrEqualTo(?bil, "11.0"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:lessThanOrEqualTo(?alt, "9.25"^^xsd:float) -> isHepatitisCpatient(?x, true)
signs_borderline_alt: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:lessThanOrEqualTo(?alt, "9.65"^^xsd:float) ^ hasValueBIL(?x, ?bil) ^ swrlb:lessThanOrEqualTo(?bil, "11.0"^^xsd:float) ^ swrlb:greaterThan(?alt, "9.25"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:lessThanOrEqualTo(?alp, "52.3"^^xsd:float) -> isShowingSigns(?x, true)
cirrhosis_high_bil: Patient(?x) ^ hasValueALP(?x, ?alp) ^ swrlb:lessThanOrEqualTo(?alp, "52.3"^^xsd:float) ^ hasValueBIL(?x, ?bil) ^ swrlb:greaterThan(?bil, "11.0"^^xsd:float) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "31.2"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:lessThanOrEqualTo(?alt, "9.65"^^xsd:float) -> isCirrhosisPatient(?x, true)
fibrosis_high_bil: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:lessThanOrEqualTo(?alt, "9.65"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:lessThanOrEqualTo(?alp, "52.3"^^xsd:float) ^ swrlb:greaterThan(?ast, "33.9"^^xsd:float) ^ hasValueBIL(?x, ?bil) ^ swrlb:greaterThan(?bil, "11.0"^^xsd:float) -> isFibrosisPatient(?x, true)
healthy_mid_alp: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:greaterThan(?alp, "52.3"^^xsd:float) ^ swrlb:lessThanOrEqualTo(?alp, "98.6"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:lessThanOrEqualTo(?alt, "9.65"^^xsd:float) -> isHealthy(?x, true)
healthy_normal_panel: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALB(?x, ?alb) ^ swrlb:greaterThan(?alb, "25.55"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:greaterThan(?alt, "9.65"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:greaterThan(?alp, "28.2"^^xsd:float) -> isHealthy(?x, true)
# tree paths
tree_healthy_alp_band: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:greaterThan(?alp, "52.3"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:lessThanOrEqualTo(?alt, "9.65"^^xsd:float) ^ swrlb:lessThanOrEqualTo(?alp, "98.6"^^xsd:float) -> isHealthy(?x, true)
tree_signs_low_alb: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:greaterThan(?alt, "9.65"^^xsd:float) ^ hasValueALB(?x, ?alb) ^ swrlb:lessThanOrEqualTo(?alb, "25.55"^^xsd:float) -> isShowingSigns(?x, true)
tree_hepc: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:lessThanOrEqualTo(?alp, "52.3"^^xsd:float) ^ hasValueBIL(?x, ?bil) ^ swrlb:lessThanOrEqualTo(?bil, "11.0"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:lessThanOrEqualTo(?alt, "9.25"^^xsd:float) -> isHepatitisCpatient(?x, true)
tree_fibrosis_ggt_band: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:greaterThan(?alt, "9.65"^^xsd:float) ^ hasValueALB(?x, ?alb) ^ swrlb:greaterThan(?alb, "25.55"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:greaterThan(?alp, "28.2"^^xsd:float) ^ swrlb:lessThanOrEqualTo(?ast, "38.05"^^xsd:float) ^ swrlb:greaterThan(?ast, "33.05"^^xsd:float) ^ swrlb:greaterThan(?ast, "33.2"^^xsd:float) ^ hasValueGGT(?x, ?ggt) ^ swrlb:greaterThan(?ggt, "83.3"^^xsd:float) ^ swrlb:lessThanOrEqualTo(?ggt, "88.35"^^xsd:float) -> isFibrosisPatient(?x, true)
tree_cirrhosis_high_alp: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:lessThanOrEqualTo(?alt, "9.65"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:greaterThan(?alp, "52.3"^^xsd:float) ^ swrlb:greaterThan(?alp, "98.6"^^xsd:float) ^ hasValueBIL(?x, ?bil) ^ swrlb:greaterThan(?bil, "11.0"^^xsd:float) -> isCirrhosisPatient(?x, true)
tree_healthy_low_ast: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALB(?x, ?alb) ^ swrlb:greaterThan(?alb, "25.55"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:greaterThan(?alt, "9.65"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:greaterThan(?alp, "28.2"^^xsd:float) ^ swrlb:lessThanOrEqualTo(?ast, "38.05"^^xsd:float) ^ swrlb:lessThanOrEqualTo(?ast, "33.05"^^xsd:float) -> isHealthy(?x, true)
tree_healthy_low_alp: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, "53.05"^^xsd:float) ^ hasValueALB(?x, ?alb) ^ swrlb:greaterThan(?alb, "25.55"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ swrlb:greaterThan(?alt, "9.65"^^xsd:float) ^ hasValueALP(?x, ?alp) ^ swrlb:lessThanOrEqualTo(?alp, "28.2"^^xsd:float) ^ swrlb:lessThanOrEqualTo(?alb, "43.8"^^xsd:float) -> isHealthy(?x, true)
)";

// National hepatitis programme guideline rules. Differences from the
// printed versions: the RNA rule concludes a class atom so the lifestyle
// rule can chain on it, and the two three-argument heads are split into
// pairs of binary atoms.
inline constexpr std::string_view guideline_rules = R"(hcv_identify: Patient(?p) ^ hasTestResult(?p, ?test) ^ HCVRNA_Test(?test) ^ PositiveResult(?test) -> HepatitisC_Patient(?p)
treatment_eligibility: HepatitisC_Patient(?p) ^ hasFibrosisStage(?p, ?stage) ^ swrlb:greaterThanOrEqualTo(?stage, 0) ^ swrlb:lessThanOrEqualTo(?stage, 2) -> EligibleForStandardTreatment(?p, true)
advanced_fibrosis_referral: HepatitisC_Patient(?p) ^ hasFibrosisStage(?p, ?stage) ^ swrlb:greaterThanOrEqualTo(?stage, 3) -> NeedsSpecializedManagement(?p, hospitalized)
on_treatment_monitoring: HepatitisC_Patient(?p) ^ OnAntiviralTreatment(?p) -> needsMonitoring(?p, every4Weeks)
post_treatment_followup: HepatitisC_Patient(?p) ^ CompletedTreatment(?p) -> needsTest(?p, HCVRNA_Test) ^ testTiming(?p, postTreatment12Weeks)
non_responder: HepatitisC_Patient(?p) ^ CompletedTreatment(?p) ^ hasTestResult(?p, ?test) ^ HCVRNA_Test(?test) ^ PositiveResult(?test) ^ postTreatment12Weeks(?test) -> NonResponder(?p)
hcv_lifestyle: HepatitisC_Patient(?p) -> needsLifestyleChange(?p, AvoidAlcohol) ^ needsVaccination(?p, HepatitisA) ^ needsVaccination(?p, HepatitisB)
cirrhosis_identify: Patient(?p) ^ hasLiverBiopsyResult(?p, ?result) ^ CirrhosisStage(?result, F4) -> Cirrhosis_Patient(?p)
hcc_screening: Cirrhosis_Patient(?p) -> needsScreening(?p, Ultrasound) ^ screeningInterval(?p, every6Months)
varices_screening: Cirrhosis_Patient(?p) -> needsScreening(?p, UpperEndoscopy)
encephalopathy_monitoring: Cirrhosis_Patient(?p) -> needsMonitoring(?p, HepaticEncephalopathySigns)
ascites_management: Cirrhosis_Patient(?p) ^ hasAscites(?p) -> needsTreatment(?p, Diuretics) ^ needsDietaryChange(?p, SodiumRestriction)
transplant_referral: Cirrhosis_Patient(?p) ^ hasDecompensatedLiverDisease(?p) -> needsReferral(?p, LiverTransplantEvaluation)
cirrhosis_abstinence: Cirrhosis_Patient(?p) -> needsLifestyleChange(?p, AbstainFromAlcohol)
)";

// Domain classes and properties layered on the upper-level skeleton.
inline constexpr std::string_view liver_schema = R"(# liver disease ontology
class Symptoms sub GenericallyDependentContinuant
class Sex sub GenericallyDependentContinuant
class Precautions sub GenericallyDependentContinuant
class Healthcare_Providers sub IndependentContinuant
class Hospitals sub IndependentContinuant
class Pathology_Labs sub IndependentContinuant
class Risk_Factors sub IndependentContinuant
class Liver_Diseases sub IndependentContinuant
class Allergies sub SpecificallyDependentContinuant
class Treatments sub SpecificallyDependentContinuant
class Category sub SpecificallyDependentContinuant
class Patient sub SpecificallyDependentContinuant
class DiagnosticProcedure sub Process
class MedicalObservation sub SpatiotemporalRegion

objprop has_Symptom domain Patient range Symptoms
objprop is_SymptomOf domain Symptoms range Liver_Diseases
objprop hasHealthInsurance domain Patient range Healthcare_Providers
objprop hasPrecautions domain Liver_Diseases range Precautions
objprop is_Alcoholic domain Patient range Risk_Factors

dataprop hasValueALB domain Patient
dataprop hasValueALP domain Patient
dataprop hasValueALT domain Patient
dataprop hasValueAST domain Patient
dataprop hasValueBIL domain Patient
dataprop hasValueCHE domain Patient
dataprop hasValueCHOL domain Patient
dataprop hasValueCREA domain Patient
dataprop hasValueGGT domain Patient
dataprop hasValuePROT domain Patient
dataprop isCirrhosisPatient domain Patient
dataprop isHealthy domain Patient
dataprop Sex domain Patient

annotation label Liver disease knowledge graph
)";

inline std::vector<rules::Rule> load_diagnostic_rules() { return rules::parse_rule_file(diagnostic_rules); }
inline std::vector<rules::Rule> load_guideline_rules() { return rules::parse_rule_file(guideline_rules); }

}  // namespace liverkg::knowledge
