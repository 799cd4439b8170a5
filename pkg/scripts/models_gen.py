import copy, json, pathlib, sys
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from blockagent.textio import model_from_record, emit_model_text
from blockagent.ir import canonicalize

RAW = str(pathlib.Path(__file__).resolve().parents[1] / "src/blockagent/data/raw") + "/"
OUT = str(pathlib.Path(__file__).resolve().parents[1] / "src/blockagent/data/models") + "/"

def q(v, u):
    return {"Value": v, "Unit": u}

def write(name, rec, canonical=True):
    m = model_from_record(rec)
    if canonical:
        m = canonicalize(m)
    with open(OUT + name + ".json", "w", newline="\n") as fh:
        fh.write(emit_model_text(m))

def c(s, d):
    return {"Src": s, "Dst": d}

pump = {
    "Blocks": {
        "T_ref": {"Type": "Inport", "Port": 1},
        "T_meas": {"Type": "Inport", "Port": 2},
        "Temperature Error": {"Type": "Sum", "Inputs": "-+"},
        "Controller Gain": {"Type": "Gain", "Gain": 0.05},
        "Flow Limit": {"Type": "Saturation", "UpperLimit": 2.0, "LowerLimit": 0.1},
        "Flow Cmd": {"Type": "Outport", "Port": 1},
    },
    "Connections": [
        c("T_ref/1", "Temperature Error/1"),
        c("T_meas/1", "Temperature Error/2"),
        c("Temperature Error/1", "Controller Gain/1"),
        c("Controller Gain/1", "Flow Limit/1"),
        c("Flow Limit/1", "Flow Cmd/1"),
    ],
}
cooling_start = {
    "Blocks": {
        "Convective Heat Transfer": {"Type": "Convective Heat Transfer", "area": q(0.5, "m^2"), "heat_tr_coeff": q(40, "W/(m^2*K)")},
        "Coolant Channels": {"Type": "Pipe (TL)", "length": q(2, "m")},
        "Coolant Properties": {"Type": "Thermal Liquid Settings (TL)"},
        "Coolant Tank": {"Type": "Coolant Tank", "volume": q(0.02, "m^3")},
        "Environment Temperature": {"Type": "Temperature Source", "Temperature": q(298.15, "K")},
        "Fuel Cell Stack": {"Type": "Fuel Cell Stack", "Heat_generation": q(8000, "W")},
        "Coolant Pump": {"Type": "Flow Rate Source (TL)"},
        "Radiator": {"Type": "Radiator"},
        "Thermal Mass": {"Type": "Thermal Mass", "mass": q(2, "kg")},
        "Thermal Reference": {"Type": "Thermal Reference"},
        "Solver Configuration": {"Type": "Solver Configuration"},
        "Temperature Setpoint": {"Type": "Constant", "Value": 340},
        "Simulink-PS Converter": {"Type": "Simulink-PS Converter", "Unit": "kg/s"},
        "Pump Control": {"Type": "Subsystem", "Summary": "Proportional coolant flow controller with saturation.", "Inner": pump},
    },
    "Connections": [
        c("Convective Heat Transfer/LConn1", "Radiator/LConn2"),
        c("Thermal Mass/LConn1", "Radiator/LConn2"),
        c("Environment Temperature/RConn1", "Convective Heat Transfer/RConn1"),
        c("Environment Temperature/LConn1", "Thermal Reference/LConn1"),
        c("Coolant Channels/RConn2", "Fuel Cell Stack/LConn1"),
        c("Coolant Tank/RConn1", "Coolant Pump/LConn2"),
        c("Coolant Pump/RConn1", "Coolant Channels/LConn1"),
        c("Coolant Channels/RConn1", "Radiator/LConn1"),
        c("Radiator/RConn1", "Coolant Tank/LConn1"),
        c("Coolant Properties/LConn1", "Coolant Tank/LConn1"),
        c("Solver Configuration/RConn1", "Coolant Tank/LConn1"),
        c("Temperature Setpoint/1", "Pump Control/1"),
        c("Pump Control/1", "Simulink-PS Converter/1"),
        c("Simulink-PS Converter/RConn1", "Coolant Pump/LConn1"),
    ],
}
write("cooling_start", cooling_start)

final = copy.deepcopy(cooling_start)
final["Blocks"]["Temperature Sensor"] = {"Type": "Temperature Sensor", "Temperature_measure": "Absolute"}
final["Blocks"]["PS-Simulink Converter"] = {"Type": "PS-Simulink Converter"}
final["Connections"] += [
    c("Fuel Cell Stack/LConn1", "Temperature Sensor/LConn1"),
    c("Temperature Sensor/RConn2", "PS-Simulink Converter/LConn1"),
    c("PS-Simulink Converter/1", "Pump Control/2"),
]
write("cooling_final", final)

g1 = copy.deepcopy(cooling_start)
g1["Blocks"]["Temperature Sensor"] = {"Type": "simscape/Foundation/Temperature Sensors/Temperature Sensor"}
g1["Blocks"]["PS-Simulink"] = {"Type": "simscape/Utilities/PS-Simulink Converter"}
g1["Blocks"]["Thermal Reference"] = {"Type": "simscape/Foundation/Thermal/Thermal Reference"}
g1["Connections"] += [
    c("Fuel Cell Stack/H", "Temperature Sensor/H"),
    c("Thermal Reference/R", "Temperature Sensor/R"),
    c("Temperature Sensor/S", "PS-Simulink/1"),
    c("PS-Simulink/1", "Pump Control/T_meas"),
]
write("gpt4o_case1", g1)

g2 = copy.deepcopy(cooling_start)
g2["Blocks"]["Temperature Sensor"] = {"Type": "Temperature Sensor"}
g2["Connections"] += [
    c("Fuel Cell Stack/1", "Temperature Sensor/L"),
    c("Temperature Sensor/R", "Pump Control/2"),
]
write("gpt4o_case2", g2)

opamp = {
    "Blocks": {
        "Solver Configuration": {"Type": "Solver Configuration"},
        "AC Voltage Source": {"Type": "AC Voltage Source", "amp": q(1, "V"), "frequency": q(60, "Hz")},
        "Electrical Reference": {"Type": "Electrical Reference"},
        "C": {"Type": "Capacitor", "c": q(1e-6, "F")},
        "R": {"Type": "Resistor", "R": q(1000, "Ohm")},
        "Op-Amp": {"Type": "Op-Amp"},
        "Vin Sensor": {"Type": "Voltage Sensor"},
        "Vout Sensor": {"Type": "Voltage Sensor"},
        "PS-Simulink Converter Vin": {"Type": "PS-Simulink Converter"},
        "PS-Simulink Converter Vout": {"Type": "PS-Simulink Converter"},
        "Mux": {"Type": "Mux", "Inputs": 2},
        "Voltages": {"Type": "Scope"},
    },
    "Connections": [
        c("AC Voltage Source/-", "Electrical Reference/V"),
        c("AC Voltage Source/+", "C/LConn1"),
        c("C/RConn1", "Op-Amp/n"),
        c("Op-Amp/p", "Electrical Reference/V"),
        c("Op-Amp/out", "R/LConn1"),
        c("R/RConn1", "Op-Amp/n"),
        c("Vin Sensor/+", "AC Voltage Source/+"),
        c("Vin Sensor/-", "Electrical Reference/V"),
        c("Vout Sensor/+", "Op-Amp/out"),
        c("Vout Sensor/-", "Electrical Reference/V"),
        c("Solver Configuration/RConn1", "AC Voltage Source/+"),
        c("Vin Sensor/V", "PS-Simulink Converter Vin/LConn1"),
        c("Vout Sensor/V", "PS-Simulink Converter Vout/LConn1"),
        c("PS-Simulink Converter Vin/1", "Mux/1"),
        c("PS-Simulink Converter Vout/1", "Mux/2"),
        c("Mux/1", "Voltages/1"),
    ],
}
write("opamp_original", opamp)

rebuilt = {
    "Blocks": {
        "AC Voltage Source": {"Type": "AC Voltage Source", "amp": q(1, "V"), "frequency": q(60, "Hz")},
        "Capacitor": {"Type": "Capacitor", "c": q(1e-6, "F")},
        "Eref": {"Type": "Electrical Reference"},
        "Resistor": {"Type": "Resistor", "R": q(10000, "Ohm")},
        "Op-Amp": {"Type": "Op-Amp"},
        "Voltage Sensor Vin": {"Type": "Voltage Sensor"},
        "Voltage Sensor Vout": {"Type": "Voltage Sensor"},
        "PS-Simulink Vin": {"Type": "PS-Simulink Converter"},
        "PS-Simulink Vout": {"Type": "PS-Simulink Converter"},
        "Solver Configuration": {"Type": "Solver Configuration"},
        "Mux": {"Type": "Mux", "Inputs": 2},
        "Scope": {"Type": "Scope"},
    },
    "Connections": [
        c("AC Voltage Source/-", "Eref/V"),
        c("AC Voltage Source/+", "Capacitor/LConn1"),
        c("Capacitor/RConn1", "Op-Amp/n"),
        c("Op-Amp/p", "Eref/V"),
        c("Op-Amp/out", "Resistor/LConn1"),
        c("Resistor/RConn1", "Op-Amp/n"),
        c("Voltage Sensor Vin/+", "AC Voltage Source/+"),
        c("Voltage Sensor Vin/-", "Eref/V"),
        c("Voltage Sensor Vout/+", "Op-Amp/out"),
        c("Voltage Sensor Vout/-", "Eref/V"),
        c("Solver Configuration/RConn1", "Capacitor/LConn1"),
        c("Voltage Sensor Vin/V", "PS-Simulink Vin/LConn1"),
        c("Voltage Sensor Vout/V", "PS-Simulink Vout/LConn1"),
        c("PS-Simulink Vin/1", "Mux/1"),
        c("PS-Simulink Vout/1", "Mux/2"),
        c("Mux/1", "Scope/1"),
    ],
}
write("opamp_rebuilt", rebuilt)

pmsg = {
    "Blocks": {
        "DC Machine": {"Type": "DC Machine"},
        "Permanent Magnet Synchronous Generator": {"Type": "Permanent Magnet Synchronous Generator"},
        "AC-DC Converter": {"Type": "Three-Level NPC Converter"},
        "DC-DC Converter": {"Type": "DC Machine"},
        "DC Load": {"Type": "DC Machine"},
    },
    "Connections": [
        c("DC Machine/1", "Permanent Magnet Synchronous Generator/1"),
        c("Permanent Magnet Synchronous Generator/(LConn1,LConn2,LConn3)", "AC-DC Converter/(LConn1,LConn2,LConn3)"),
        c("AC-DC Converter/RConn1", "DC-DC Converter/LConn1"),
        c("AC-DC Converter/RConn2", "DC-DC Converter/LConn2"),
        c("DC-DC Converter/RConn1", "DC Load/LConn1"),
        c("DC Load/RConn1", "DC-DC Converter/LConn2"),
    ],
}
json.dump(pmsg, open(RAW + "pmsg_raw.json", "w"))
write("pmsg_final", pmsg)

ac = {"Type": "AC Voltage Source", "amp": q(120, "V"), "frequency": q(60, "Hz")}
sub1 = {
    "Blocks": {
        "AC Voltage Source": ac,
        "Ideal_Transformer": {"Type": "Ideal Transformer", "n": 0.1},
        "ERef_T1": {"Type": "Electrical Reference"},
        "ERef_T2": {"Type": "Electrical Reference"},
    },
    "Connections": [
        c("AC Voltage Source/LConn1", "Ideal Transformer/LConn1"),
        c("AC Voltage Source/RConn1", "Ideal_Transformer/LConn2"),
        c("Ideal_Transformer/LConn2", "ERef_T1/LConn1"),
        c("Ideal_Transformer/RConn2", "ERef_T2/LConn1"),
    ],
}
sub2 = {
    "Blocks": {
        "AC Voltage Source": ac,
        "C": {"Type": "Capacitor", "c": q(1e-3, "F")},
        "Diode 1": {"Type": "Diode"},
        "Diode 2": {"Type": "Diode"},
        "Diode 3": {"Type": "Diode"},
        "Diode 4": {"Type": "Diode"},
        "R Load": {"Type": "Resistor", "R": q(100, "Ohm")},
        "Solver Configuration": {"Type": "Solver Configuration"},
        "Voltage Sensor": {"Type": "Voltage Sensor"},
        "PS-Simulink Converter": {"Type": "PS-Simulink Converter"},
        "Scope": {"Type": "Scope"},
    },
    "Connections": [
        c("Diode 3/RConn1", "Diode 1/LConn1"),
        c("Diode 3/RConn1", "Ideal Transformer/RConn1"),
        c("Diode 4/RConn1", "Diode 2/LConn1"),
        c("Diode 4/RConn1", "Ideal_Transformer/RConn2"),
        c("Diode 1/RConn1", "C/LConn1"),
        c("Diode 2/RConn1", "C/LConn1"),
        c("Diode 3/LConn1", "C/RConn1"),
        c("Diode 4/LConn1", "C/RConn1"),
        c("R Load/LConn1", "C/LConn1"),
        c("R Load/RConn1", "C/RConn1"),
        c("Voltage Sensor/LConn1", "C/LConn1"),
        c("Voltage Sensor/RConn1", "C/RConn1"),
        c("Voltage Sensor/RConn2", "PS-Simulink Converter/LConn1"),
        c("PS-Simulink Converter/LConn1", "Solver Configuration/RConn1"),
        c("PS-Simulink Converter/1", "Scope/1"),
        c("Diode_1/1", "C/1"),
    ],
}
json.dump({"sub1": sub1, "sub2": sub2}, open(RAW + "rect_raw.json", "w"))
write("rectifier_sub1", sub1)
write("rectifier_sub2", sub2)
merged = {"Blocks": {**sub1["Blocks"], **sub2["Blocks"]}, "Connections": sub1["Connections"] + sub2["Connections"]}
write("rectifier_failed", merged)

# small validator-clean target for the edit-quest environment
rc = {
    "Blocks": {
        "Source": {"Type": "AC Voltage Source", "amp": q(5, "V"), "frequency": q(50, "Hz")},
        "R1": {"Type": "Resistor", "R": q(220, "Ohm")},
        "C1": {"Type": "Capacitor", "c": q(1e-5, "F")},
        "Ground": {"Type": "Electrical Reference"},
        "Solver": {"Type": "Solver Configuration"},
        "Probe": {"Type": "Voltage Sensor"},
        "Converter": {"Type": "PS-Simulink Converter"},
        "Display": {"Type": "Scope"},
    },
    "Connections": [
        c("Source/+", "R1/LConn1"),
        c("R1/RConn1", "C1/LConn1"),
        c("C1/RConn1", "Ground/V"),
        c("Source/-", "Ground/V"),
        c("Solver/RConn1", "Source/+"),
        c("Probe/+", "C1/LConn1"),
        c("Probe/-", "Ground/V"),
        c("Probe/V", "Converter/LConn1"),
        c("Converter/1", "Display/1"),
    ],
}
write("rc_filter", rc)
print("ok")
