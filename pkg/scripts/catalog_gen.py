import json
import pathlib

def P(id, domain, alias=None, required=False):
    d = {"id": id, "domain": domain}
    if alias is not None:
        d["alias"] = alias
    if required:
        d["required"] = True
    return d

def num(name, lo=None, hi=None, unit=None, required=False, default=None):
    d = {"name": name, "kind": "number"}
    if lo is not None or hi is not None:
        d["range"] = [lo, hi]
    if unit:
        d["unit"] = unit
    if required:
        d["required"] = True
    if default is not None:
        d["default"] = default
    return d

def enum(name, values, default=None):
    d = {"name": name, "kind": "enum", "values": values}
    if default is not None:
        d["default"] = default
    return d

def string(name, default=None):
    d = {"name": name, "kind": "string"}
    if default is not None:
        d["default"] = default
    return d

FND = "Simscape / Foundation Library"
B = []
def add(type, path, desc, ports, params=(), aliases=(), label=None, library=None, needs_solver=None):
    rec = {"type": type, "library_path": path, "description": desc, "ports": list(ports),
           "params": list(params), "aliases": list(aliases)}
    if label:
        rec["library_label"] = label
    if library:
        rec["library"] = library
    if needs_solver is not None:
        rec["needs_solver"] = needs_solver
    B.append(rec)

# thermal
add("Temperature Sensor", "fl_lib/Thermal/Thermal Sensors/Temperature Sensor",
    "Ideal sensor reporting the temperature at thermal node A, or the difference between nodes A and B, without any heat flow. A and B are thermal conserving ports; T is a physical signal output.",
    [P("LConn1", "thermal", "A", True), P("RConn1", "thermal", "B"), P("RConn2", "physical-signal", "T")],
    [enum("Temperature_measure", ["Absolute", "Difference"], "Difference")],
    ["thermometer", "temperature measurement"], label=f"{FND} / Thermal / Thermal Sensors")
add("Temperature Source", "fl_lib/Thermal/Thermal Sources/Temperature Source",
    "Holds port A at a fixed temperature relative to port B regardless of the heat flow through it.",
    [P("LConn1", "thermal", "B", True), P("RConn1", "thermal", "A", True)],
    [num("Temperature", 0, None, "K", required=True)],
    ["ideal temperature source", "ambient temperature"], label=f"{FND} / Thermal / Thermal Sources")
add("Convective Heat Transfer", "fl_lib/Thermal/Thermal Elements/Convective Heat Transfer",
    "Heat transfer by convection between two thermal nodes, proportional to area, coefficient and temperature difference.",
    [P("LConn1", "thermal", "A", True), P("RConn1", "thermal", "B", True)],
    [num("area", 0, None, "m^2", default=1e-4), num("heat_tr_coeff", 0, None, "W/(m^2*K)", default=20)],
    ["convection"], label=f"{FND} / Thermal / Thermal Elements")
add("Thermal Mass", "fl_lib/Thermal/Thermal Elements/Thermal Mass",
    "Lumped thermal capacitance storing heat at a single thermal node.",
    [P("LConn1", "thermal", "M", True)],
    [num("mass", 0, None, "kg", default=1), num("sp_heat", 0, None, "J/(kg*K)", default=447)],
    ["heat capacity", "thermal capacitance"], label=f"{FND} / Thermal / Thermal Elements")
add("Thermal Reference", "fl_lib/Thermal/Thermal Elements/Thermal Reference",
    "Reference node at absolute zero temperature for thermal networks.",
    [P("LConn1", "thermal", "H", True)], [], ["thermal ground"], label=f"{FND} / Thermal / Thermal Elements")
add("Fuel Cell Stack", "ee_lib/Sources/Fuel Cell Stack",
    "Lumped fuel cell stack model exposing its waste heat at thermal port H.",
    [P("LConn1", "thermal", "H", True)],
    [num("Heat_generation", 0, None, "W", default=5000)],
    ["fuel cell", "PEM stack"], label="Simscape / Electrical / Sources")
# thermal liquid
add("Radiator", "fl_lib/Thermal Liquid/Heat Exchangers/Radiator",
    "Coolant-to-air heat exchanger: thermal liquid flows from A to B while heat leaves through thermal port H.",
    [P("LConn1", "thermal-liquid", "A", True), P("LConn2", "thermal", "H", True), P("RConn1", "thermal-liquid", "B", True)],
    [num("area", 0, None, "m^2", default=0.5)],
    ["heat exchanger"], label=f"{FND} / Thermal Liquid / Heat Exchangers")
add("Pipe (TL)", "fl_lib/Thermal Liquid/Elements/Pipe (TL)",
    "Rigid pipe carrying thermal liquid between A and B with wall heat exchange through thermal port H.",
    [P("LConn1", "thermal-liquid", "A", True), P("RConn1", "thermal-liquid", "B", True), P("RConn2", "thermal", "H")],
    [num("length", 0, None, "m", default=5), num("area", 0, None, "m^2", default=0.01)],
    ["pipe", "coolant channel", "thermal liquid pipe"], label=f"{FND} / Thermal Liquid / Elements")
add("Thermal Liquid Settings (TL)", "fl_lib/Thermal Liquid/Utilities/Thermal Liquid Settings (TL)",
    "Fluid property tables for the thermal liquid network it is attached to.",
    [P("LConn1", "thermal-liquid", "A", True)], [string("fluid", "water")],
    ["fluid properties", "coolant properties"], label=f"{FND} / Thermal Liquid / Utilities")
add("Coolant Tank", "fl_lib/Thermal Liquid/Tanks & Accumulators/Coolant Tank",
    "Reservoir of thermal liquid at constant pressure with inlet A and outlet B.",
    [P("LConn1", "thermal-liquid", "A", True), P("RConn1", "thermal-liquid", "B", True)],
    [num("volume", 0, None, "m^3", default=0.02)],
    ["reservoir", "tank"], label=f"{FND} / Thermal Liquid / Tanks & Accumulators")
add("Flow Rate Source (TL)", "fl_lib/Thermal Liquid/Sources/Flow Rate Source (TL)",
    "Ideal pump imposing the mass flow rate commanded at physical signal port M from A to B.",
    [P("LConn1", "physical-signal", "M", True), P("LConn2", "thermal-liquid", "A", True), P("RConn1", "thermal-liquid", "B", True)],
    [], ["pump", "coolant pump", "mass flow source"], label=f"{FND} / Thermal Liquid / Sources")
# utilities
add("Solver Configuration", "nesl_utility/Solver Configuration",
    "Solver settings for the physical network it is connected to; every physical network needs one.",
    [P("RConn1", "any", None, True)], [], ["solver", "simscape solver"],
    label="Simscape / Utilities", needs_solver=False)
add("PS-Simulink Converter", "nesl_utility/PS-Simulink Converter",
    "Converts a physical signal at LConn1 into a unitless Simulink output signal.",
    [P("LConn1", "physical-signal", None, True), P("1", "signal-out")],
    [string("Unit", "1")], ["physical signal to simulink", "ps converter"], label="Simscape / Utilities")
add("Simulink-PS Converter", "nesl_utility/Simulink-PS Converter",
    "Converts a Simulink input signal into a physical signal at RConn1.",
    [P("1", "signal-in", None, True), P("RConn1", "physical-signal")],
    [string("Unit", "1")], ["simulink to physical signal"], label="Simscape / Utilities")
add("Connection Port", "nesl_utility/Connection Port",
    "Physical modeling port exposing an internal conserving node on the subsystem boundary.",
    [P("RConn1", "any", None, True)],
    [num("Port", 1, None, required=True), enum("Side", ["Left", "Right"], "Left")],
    ["subsystem port"], label="Simscape / Utilities", needs_solver=False)
# simulink
SL = "Simulink"
add("Constant", "simulink/Sources/Constant", "Outputs a constant value.",
    [P("1", "signal-out")], [num("Value", default=1)], ["setpoint"], label=f"{SL} / Sources")
add("Gain", "simulink/Math Operations/Gain", "Multiplies the input by a constant gain.",
    [P("1", "signal-in", None, True), P("1", "signal-out")], [num("Gain", default=1)],
    ["amplifier gain", "multiply"], label=f"{SL} / Math Operations")
add("Sum", "simulink/Math Operations/Sum", "Adds or subtracts its inputs according to the sign list.",
    [P("1", "signal-in", None, True), P("2", "signal-in", None, True), P("1", "signal-out")],
    [string("Inputs", "++")], ["add", "subtract", "summation"], label=f"{SL} / Math Operations")
add("Saturation", "simulink/Discontinuities/Saturation", "Limits the input to upper and lower bounds.",
    [P("1", "signal-in", None, True), P("1", "signal-out")],
    [num("UpperLimit", default=0.5), num("LowerLimit", default=-0.5)], ["limiter", "clamp"],
    label=f"{SL} / Discontinuities")
add("Scope", "simulink/Sinks/Scope", "Displays input signals over simulation time.",
    [P("1", "signal-in", None, True)], [num("NumInputPorts", 1, None, default=1)],
    ["oscilloscope", "plot", "display"], label=f"{SL} / Sinks")
add("Mux", "simulink/Signal Routing/Mux", "Combines its inputs into one vector signal.",
    [P("1", "signal-in", None, True), P("2", "signal-in", None, True), P("1", "signal-out")],
    [num("Inputs", 1, None, default=2)], ["multiplexer", "combine signals"], label=f"{SL} / Signal Routing")
add("Inport", "simulink/Sources/In1", "Subsystem signal input port.",
    [P("1", "signal-out")], [num("Port", 1, None, required=True)], ["input port", "in1"], label=f"{SL} / Sources")
add("Outport", "simulink/Sinks/Out1", "Subsystem signal output port.",
    [P("1", "signal-in", None, True)], [num("Port", 1, None, required=True)], ["output port", "out1"], label=f"{SL} / Sinks")
# electrical foundation
EL = f"{FND} / Electrical"
add("AC Voltage Source", "fl_lib/Electrical/Electrical Sources/AC Voltage Source",
    "Ideal sinusoidal voltage source between its positive and negative terminals.",
    [P("LConn1", "electrical", "+", True), P("RConn1", "electrical", "-", True)],
    [num("amp", 0, None, "V", default=1), num("frequency", 0, None, "Hz", default=60)],
    ["sine voltage source", "ac source"], label=f"{EL} / Electrical Sources")
add("DC Voltage Source", "fl_lib/Electrical/Electrical Sources/DC Voltage Source",
    "Ideal constant voltage source between its positive and negative terminals.",
    [P("LConn1", "electrical", "+", True), P("RConn1", "electrical", "-", True)],
    [num("v0", None, None, "V", default=1)], ["battery", "dc source"], label=f"{EL} / Electrical Sources")
add("Capacitor", "fl_lib/Electrical/Electrical Elements/Capacitor",
    "Linear capacitor storing charge between its two electrical terminals.",
    [P("LConn1", "electrical", "+", True), P("RConn1", "electrical", "-", True)],
    [num("c", 0, None, "F", default=1e-6)], ["condenser"], label=f"{EL} / Electrical Elements")
add("Resistor", "fl_lib/Electrical/Electrical Elements/Resistor",
    "Linear resistor obeying Ohm's law between its two electrical terminals.",
    [P("LConn1", "electrical", "+", True), P("RConn1", "electrical", "-", True)],
    [num("R", 0, None, "Ohm", default=1)], ["load", "resistance"], label=f"{EL} / Electrical Elements")
add("Inductor", "fl_lib/Electrical/Electrical Elements/Inductor",
    "Linear inductor between its two electrical terminals.",
    [P("LConn1", "electrical", "+", True), P("RConn1", "electrical", "-", True)],
    [num("l", 0, None, "H", default=1e-6)], ["coil", "choke"], label=f"{EL} / Electrical Elements")
add("Electrical Reference", "fl_lib/Electrical/Electrical Elements/Electrical Reference",
    "Ground node at zero voltage for electrical networks.",
    [P("LConn1", "electrical", "V", True)], [], ["ground", "electrical ground"], label=f"{EL} / Electrical Elements")
add("Op-Amp", "fl_lib/Electrical/Electrical Elements/Op-Amp",
    "Ideal operational amplifier with non-inverting input p, inverting input n and output out.",
    [P("LConn1", "electrical", "p", True), P("LConn2", "electrical", "n", True), P("RConn1", "electrical", "out", True)],
    [], ["operational amplifier", "opamp"], label=f"{EL} / Electrical Elements")
add("Diode", "fl_lib/Electrical/Electrical Elements/Diode",
    "Piecewise-linear diode conducting from its positive to its negative terminal.",
    [P("LConn1", "electrical", "+", True), P("RConn1", "electrical", "-", True)],
    [num("Vf", 0, None, "V", default=0.6)], ["rectifier diode"], label=f"{EL} / Electrical Elements")
add("Ideal Transformer", "fl_lib/Electrical/Electrical Elements/Ideal Transformer",
    "Lossless transformer coupling primary winding 1 to secondary winding 2 by the winding ratio.",
    [P("LConn1", "electrical", "1+", True), P("LConn2", "electrical", "1-", True),
     P("RConn1", "electrical", "2+", True), P("RConn2", "electrical", "2-", True)],
    [num("n", 0, None, default=1)], ["transformer"], label=f"{EL} / Electrical Elements")
add("Voltage Sensor", "fl_lib/Electrical/Electrical Sensors/Voltage Sensor",
    "Ideal voltmeter between terminals + and -, reporting the voltage at physical signal port V.",
    [P("LConn1", "electrical", "+", True), P("RConn1", "electrical", "-", True), P("RConn2", "physical-signal", "V")],
    [], ["voltmeter", "voltage measurement"], label=f"{EL} / Electrical Sensors")
add("Current Sensor", "fl_lib/Electrical/Electrical Sensors/Current Sensor",
    "Ideal ammeter in series between terminals + and -, reporting the current at physical signal port I.",
    [P("LConn1", "electrical", "+", True), P("RConn1", "electrical", "-", True), P("RConn2", "physical-signal", "I")],
    [], ["ammeter", "current measurement"], label=f"{EL} / Electrical Sensors")
# specialized power systems
SPS = "Simscape / Electrical / Specialized Power Systems"
add("DC Machine", "spsDCMachineLib/DC Machine",
    "Wound-field or permanent magnet DC machine with field terminals F+/F-, armature terminals A+/A-, torque input TL and measurement output m.",
    [P("1", "signal-in", "TL"), P("1", "signal-out", "m"), P("LConn1", "electrical", "F+"),
     P("LConn2", "electrical", "F-"), P("RConn1", "electrical", "A+"), P("RConn2", "electrical", "A-")],
    [], ["DC motor", "DC generator"], label=f"{SPS} / Electrical Machines", library="sps_lib", needs_solver=False)
add("Permanent Magnet Synchronous Machine", "spsPermanentMagnetSynchronousMachineLib/Permanent Magnet Synchronous Machine",
    "Three-phase or five-phase permanent magnet synchronous machine operating as motor or generator, with stator terminals A, B, C.",
    [P("1", "signal-in", "Tm"), P("1", "signal-out", "m"), P("LConn1", "electrical", "A"),
     P("LConn2", "electrical", "B"), P("LConn3", "electrical", "C")],
    [], ["PMSG", "PMSM"], label=f"{SPS} / Electrical Machines", library="sps_lib", needs_solver=False)
add("Permanent Magnet Synchronous Generator", "spsPermanentMagnetSynchronousMachineLib/Permanent Magnet Synchronous Machine",
    "Generator-mode configuration of the permanent magnet synchronous machine with stator terminals A, B, C.",
    [P("1", "signal-in", "Tm"), P("1", "signal-out", "m"), P("LConn1", "electrical", "A"),
     P("LConn2", "electrical", "B"), P("LConn3", "electrical", "C")],
    [], [], label=f"{SPS} / Electrical Machines", library="sps_lib", needs_solver=False)
add("Three-Level NPC Converter", "spsThreeLevelNPCConverterLib/Three-Level NPC Converter",
    "Neutral-point clamped three-level converter between AC terminals A, B, C and DC terminals + and -, switched by gate signal g.",
    [P("1", "signal-in", "g"), P("LConn1", "electrical", "A"), P("LConn2", "electrical", "B"),
     P("LConn3", "electrical", "C"), P("RConn1", "electrical", "+"), P("RConn2", "electrical", "-")],
    [], ["ACDC converter", "AC-DC converter", "rectifier", "inverter"], label=f"{SPS} / Power Electronics",
    library="sps_lib", needs_solver=False)
add("DC-DC Converter", "spsDCDCConverterLib/DC-DC Converter",
    "Average-value buck or boost converter between input terminals LConn1/LConn2 and output terminals RConn1/RConn2.",
    [P("1", "signal-in", "D"), P("LConn1", "electrical", "in+"), P("LConn2", "electrical", "in-"),
     P("RConn1", "electrical", "out+"), P("RConn2", "electrical", "out-")],
    [], ["DCDC", "buck converter", "boost converter", "chopper"], label=f"{SPS} / Power Electronics",
    library="sps_lib", needs_solver=False)
add("Simplified Synchronous Machine", "ee_lib/Electromechanical/Synchronous/Simplified Synchronous Machine",
    "Electrical and mechanical behaviour of a simplified synchronous machine.",
    [P("LConn1", "mechanical", "R"), P("LConn2", "mechanical", "C"), P("RConn1", "electrical", "~")],
    [], ["synchronous generator"], label="Simscape / Electrical / Electromechanical / Synchronous")
add("Ideal Torque Source", "fl_lib/Mechanical/Mechanical Sources/Ideal Torque Source",
    "Applies the torque commanded at physical signal port S between rotational ports R and C.",
    [P("LConn1", "physical-signal", "S", True), P("LConn2", "mechanical", "C", True), P("RConn1", "mechanical", "R", True)],
    [], ["torque source"], label=f"{FND} / Mechanical / Mechanical Sources")
add("Inertia", "fl_lib/Mechanical/Rotational Elements/Inertia",
    "Ideal rotational inertia attached to a single mechanical port.",
    [P("LConn1", "mechanical", "I", True)], [num("inertia", 0, None, "kg*m^2", default=0.01)],
    ["flywheel", "rotational mass"], label=f"{FND} / Mechanical / Rotational Elements")
add("Mechanical Rotational Reference", "fl_lib/Mechanical/Rotational Elements/Mechanical Rotational Reference",
    "Rotational reference frame fixed at zero angular velocity.",
    [P("LConn1", "mechanical", "W", True)], [], ["mechanical ground"], label=f"{FND} / Mechanical / Rotational Elements")

B.sort(key=lambda r: r["type"])
json.dump({"version": 1, "blocks": B}, open(pathlib.Path(__file__).resolve().parents[1] / "src/blockagent/data/catalog.json", "w"), indent=1, ensure_ascii=False)
print(len(B))
